//! Small dense linear algebra kit: flat row-major matrices, Cholesky
//! factorization for SPD systems, and slice helpers.
//!
//! Everything in this crate works with dimensions in the tens, so the
//! implementations favour clarity and determinism over blocking tricks.
//! All loops run in a fixed order, which keeps results bit-reproducible
//! across runs and thread schedules.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::domain("ragged rows"));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Rank-one update `self += c * v vᵀ` (square matrices only).
    pub fn add_outer(&mut self, c: f64, v: &[f64]) {
        debug_assert_eq!(self.rows, self.cols);
        debug_assert_eq!(self.rows, v.len());
        for i in 0..self.rows {
            let vi = c * v[i];
            let row = self.row_mut(i);
            for (j, r) in row.iter_mut().enumerate() {
                *r += vi * v[j];
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>, // row-major lower triangle, full n*n storage
}

impl Cholesky {
    /// Factor `a = L Lᵀ`. Fails with a numeric error when `a` is not
    /// positive definite (up to roundoff).
    pub fn factor(a: &Mat) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::domain("cholesky needs a square matrix"));
        }
        let n = a.rows;
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::numeric(format!(
                            "matrix not positive definite (pivot {s:.3e} at {i})"
                        )));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    /// Solve `A x = b` using the stored factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut s = y[i];
            for (lik, yk) in self.l[i * n..i * n + i].iter().zip(&y[..i]) {
                s -= lik * yk;
            }
            y[i] = s / self.l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, &yk) in y.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * yk;
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// log det A = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        let n = self.n;
        (0..n).map(|i| self.l[i * n + i].ln()).sum::<f64>() * 2.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scaled_add(acc: &mut [f64], c: f64, v: &[f64]) {
    debug_assert_eq!(acc.len(), v.len());
    for i in 0..acc.len() {
        acc[i] += c * v[i];
    }
}

/// Minimum-norm least-squares solution of `B x = c` where `B` is m×n with
/// m ≤ n and possibly rank-deficient. Solves through the Gram system
/// `B Bᵀ w = c`, `x = Bᵀ w`, with a tiny ridge fallback when the Gram
/// matrix is numerically singular.
pub fn min_norm_solve(b_rows: &[&[f64]], c: &[f64]) -> Result<Vec<f64>> {
    let m = b_rows.len();
    if m == 0 {
        return Err(Error::domain("empty system"));
    }
    let n = b_rows[0].len();
    let mut gram = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = dot(b_rows[i], b_rows[j]);
        }
    }
    let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0f64, f64::max).max(1.0);
    let mut ridge = 0.0;
    let w = loop {
        let mut g = gram.clone();
        if ridge > 0.0 {
            for i in 0..m {
                g[(i, i)] += ridge;
            }
        }
        match Cholesky::factor(&g) {
            Ok(ch) => break ch.solve(c),
            Err(_) => {
                ridge = if ridge == 0.0 { scale * 1e-12 } else { ridge * 100.0 };
                if ridge > scale {
                    return Err(Error::numeric("min-norm solve: Gram matrix irreparably singular"));
                }
            }
        }
    };
    let mut x = vec![0.0; n];
    for (i, row) in b_rows.iter().enumerate() {
        scaled_add(&mut x, w[i], row);
    }
    Ok(x)
}

/// Rank-revealing factorization of a symmetric PSD matrix: returns an
/// n×r factor `L` (rows in the original order) with `L Lᵀ ≈ K`, stopping
/// once the largest remaining diagonal falls below `rel_tol · trace(K)`.
/// Diagonal pivoting makes the truncation greedy-optimal, so `r` is the
/// numerical rank at that tolerance.
pub fn pivoted_cholesky(k: &Mat, rel_tol: f64) -> Result<Mat> {
    if k.rows != k.cols {
        return Err(Error::domain(format!(
            "pivoted Cholesky needs a square matrix, got {}×{}",
            k.rows, k.cols
        )));
    }
    if !(rel_tol >= 0.0) {
        return Err(Error::domain("rel_tol must be nonnegative"));
    }
    let n = k.rows;
    let mut diag: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
    let trace: f64 = diag.iter().sum();
    if trace <= 0.0 {
        // The zero matrix factors as an n×0 product.
        return Ok(Mat::zeros(n, 0));
    }
    let cutoff = rel_tol * trace;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];
    for _ in 0..n {
        let mut pivot = usize::MAX;
        let mut dmax = f64::NEG_INFINITY;
        for i in 0..n {
            if !used[i] && diag[i] > dmax {
                dmax = diag[i];
                pivot = i;
            }
        }
        if pivot == usize::MAX || dmax <= cutoff {
            if dmax < -1e-8 * trace {
                return Err(Error::numeric(format!(
                    "pivoted Cholesky: residual diagonal {dmax:.3e} is negative \
                     beyond roundoff; matrix is not positive semidefinite"
                )));
            }
            break;
        }
        let root = dmax.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = k[(i, pivot)];
            for prev in &cols {
                v -= prev[i] * prev[pivot];
            }
            col[i] = v / root;
            diag[i] -= col[i] * col[i];
        }
        col[pivot] = root;
        diag[pivot] = 0.0;
        used[pivot] = true;
        cols.push(col);
    }
    let r = cols.len();
    let mut out = Mat::zeros(n, r);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Mat::from_rows(&[
            vec![4.0, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ])
        .unwrap();
        let ch = Cholesky::factor(&a).unwrap();
        let x = ch.solve(&[1.0, -2.0, 0.5]);
        let back = a.mul_vec(&x);
        for (bi, want) in back.iter().zip([1.0, -2.0, 0.5]) {
            assert!((bi - want).abs() < 1e-12, "{bi} vs {want}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(Cholesky::factor(&a).is_err());
    }

    #[test]
    fn log_det_matches_diagonal() {
        let a = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 8.0]]).unwrap();
        let ch = Cholesky::factor(&a).unwrap();
        assert!((ch.log_det() - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn min_norm_picks_smallest_solution() {
        // single equation x0 = 0.5 in R^2 -> (0.5, 0)
        let rows: Vec<&[f64]> = vec![&[1.0, 0.0]];
        let x = min_norm_solve(&rows, &[0.5]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
    }

    #[test]
    fn rank_one_update_matches_rebuild() {
        let mut a = Mat::identity(3);
        let v = [0.5, -1.0, 2.0];
        a.add_outer(0.3, &v);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 } + 0.3 * v[i] * v[j];
                assert!((a[(i, j)] - want).abs() < 1e-15);
            }
        }
    }
}
