//! A small dense linear-program solver: two-phase primal simplex.
//!
//! Solves `min cᵀx  s.t.  Ax ≤ b, x ≥ 0` with dense tableaus. That is all
//! the minimax fit needs, and at the problem sizes that arise here (a few
//! hundred rows) a dense tableau is faster and far easier to audit than a
//! revised implementation. Dantzig pricing is used until an iteration guard
//! trips, after which Bland's rule takes over so degenerate vertices cannot
//! cycle.

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Optimal values of the structural variables, length = `c.len()`.
    pub x: Vec<f64>,
    /// Optimal objective value `cᵀx`.
    pub objective: f64,
}

struct Tableau {
    /// Constraint rows, each of length `ncols + 1` (last entry is the RHS).
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row, length `ncols + 1` (last entry is −objective).
    obj: Vec<f64>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
        }
        self.basis[r] = c;
    }

    /// Runs the simplex loop to optimality over the columns where
    /// `allowed[j]` holds. Returns an error on iteration exhaustion or an
    /// unbounded ray.
    fn optimize(&mut self, allowed: &[bool]) -> Result<()> {
        let m = self.rows.len();
        let bland_after = 50 * (m + self.ncols);
        let max_iters = 500 * (m + self.ncols) + 1000;
        for iter in 0..max_iters {
            let bland = iter >= bland_after;
            let mut entering = None;
            if bland {
                for (j, &ok) in allowed.iter().enumerate() {
                    if ok && self.obj[j] < -FEAS_TOL {
                        entering = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -FEAS_TOL;
                for (j, &ok) in allowed.iter().enumerate() {
                    if ok && self.obj[j] < best {
                        best = self.obj[j];
                        entering = Some(j);
                    }
                }
            }
            let Some(c) = entering else { return Ok(()) };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rows[r][self.ncols] / a;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - PIVOT_TOL
                                || (ratio < lratio + PIVOT_TOL && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return Err(Error::numeric("linear program is unbounded"));
            };
            self.pivot(r, c);
        }
        Err(Error::numeric(format!(
            "simplex failed to converge within {max_iters} iterations ({m} rows, {} cols)",
            self.ncols
        )))
    }
}

/// Minimizes `cᵀx` subject to `Ax ≤ b` and `x ≥ 0`.
///
/// `a_rows` holds the rows of `A`; `b` entries may be negative (phase 1
/// restores feasibility with artificial variables). Errors: shape mismatch
/// is a domain error; infeasibility, unboundedness, and non-convergence are
/// numeric errors.
pub fn minimize(c: &[f64], a_rows: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a_rows.len();
    if b.len() != m {
        return Err(Error::domain("LP row/rhs count mismatch"));
    }
    if a_rows.iter().any(|r| r.len() != n) {
        return Err(Error::domain("LP row length does not match cost vector"));
    }
    if m == 0 {
        // No constraints: optimum is x = 0 unless some cost is negative.
        if c.iter().any(|&ci| ci < -FEAS_TOL) {
            return Err(Error::numeric("linear program is unbounded"));
        }
        return Ok(LpSolution { x: vec![0.0; n], objective: 0.0 });
    }

    // Equality form: negate rows with negative RHS, add a slack per row and
    // an artificial per negated row.
    let negated: Vec<bool> = b.iter().map(|&bi| bi < 0.0).collect();
    let n_art = negated.iter().filter(|&&f| f).count();
    let ncols = n + m + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut art_idx = 0usize;
    for i in 0..m {
        let sign = if negated[i] { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        for j in 0..n {
            row[j] = sign * a_rows[i][j];
        }
        row[n + i] = sign; // slack
        if negated[i] {
            row[n + m + art_idx] = 1.0;
            basis[i] = n + m + art_idx;
            art_idx += 1;
        } else {
            basis[i] = n + i;
        }
        row[ncols] = sign * b[i];
        rows.push(row);
    }

    let mut t = Tableau { rows, obj: vec![0.0; ncols + 1], basis, ncols };
    let all_allowed = vec![true; ncols];

    if n_art > 0 {
        // Phase 1: minimize the sum of artificials. Costs are 1 on the
        // artificial columns; price out the basic artificials.
        for j in n + m..ncols {
            t.obj[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= n + m {
                for j in 0..=ncols {
                    t.obj[j] -= t.rows[i][j];
                }
            }
        }
        t.optimize(&all_allowed)?;
        let infeas = -t.obj[ncols];
        if infeas > 1e-7 {
            return Err(Error::numeric(format!(
                "linear program infeasible (phase-1 residual {infeas:.3e})"
            )));
        }
        // Drive any zero-level basic artificials out of the basis; a row
        // that offers no structural pivot is redundant and harmless.
        for r in 0..m {
            if t.basis[r] >= n + m {
                if let Some(c) =
                    (0..n + m).find(|&j| t.rows[r][j].abs() > 1e-7)
                {
                    t.pivot(r, c);
                }
            }
        }
    }

    // Phase 2: original costs, artificial columns barred from pricing.
    let mut allowed = vec![true; ncols];
    for a in allowed.iter_mut().skip(n + m) {
        *a = false;
    }
    for v in t.obj.iter_mut() {
        *v = 0.0;
    }
    t.obj[..n].copy_from_slice(c);
    for i in 0..m {
        let bi = t.basis[i];
        let cost = if bi < n { c[bi] } else { 0.0 };
        if cost != 0.0 {
            for j in 0..=ncols {
                t.obj[j] -= cost * t.rows[i][j];
            }
        }
    }
    t.optimize(&allowed)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rows[i][ncols];
        }
    }
    let objective = x.iter().zip(c.iter()).map(|(xi, ci)| xi * ci).sum();
    Ok(LpSolution { x, objective })
}
