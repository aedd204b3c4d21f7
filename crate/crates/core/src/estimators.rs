//! Robust mean estimation and the minimum-distance parameter fit.
//!
//! Heavy-tailed samples defeat the empirical mean, but their (1+ε)-moment is
//! assumed finite, so a moment-calibrated truncation (or median-of-means)
//! recovers the usual deviation rate `u^{1/(1+ε)}(log(1/δ)/n)^{ε/(1+ε)}`.
//! The minimum-distance fit turns per-arm scalar estimates back into a
//! parameter vector by solving a Chebyshev (minimax) linear program.

use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, min_norm_solve, Mat};
use crate::lp;

/// Parameters of the truncated-mean estimator.
///
/// `u` bounds the (1+ε)-absolute moment of the samples being averaged —
/// note: of the *samples*, which for inverse-propensity inputs is a design
/// dependent quantity, not the raw noise moment.
#[derive(Debug, Clone, Copy)]
pub struct TruncationConfig {
    pub u: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl TruncationConfig {
    pub fn new(u: f64, epsilon: f64, delta: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::domain(format!("moment bound u must be positive, got {u}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { u, epsilon, delta })
    }

    /// Truncation level for `n` samples: `(u·n / log(1/δ))^{1/(1+ε)}`.
    pub fn threshold(&self, n: usize) -> f64 {
        (self.u * n as f64 / (1.0 / self.delta).ln()).powf(1.0 / (1.0 + self.epsilon))
    }

    /// The deviation radius guaranteed with probability 1 − δ:
    /// `4·u^{1/(1+ε)}·(log(1/δ)/n)^{ε/(1+ε)}`.
    pub fn deviation_bound(&self, n: usize) -> f64 {
        let q = 1.0 + self.epsilon;
        4.0 * self.u.powf(1.0 / q)
            * ((1.0 / self.delta).ln() / n as f64).powf(self.epsilon / q)
    }
}

/// Empirical mean with samples beyond the moment-calibrated threshold
/// zeroed out (not discarded: the divisor stays `n`).
pub fn truncated_mean(samples: &[f64], cfg: &TruncationConfig) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("truncated_mean requires at least one sample"));
    }
    let cut = cfg.threshold(samples.len());
    let sum: f64 = samples.iter().filter(|x| x.abs() <= cut).sum();
    Ok(sum / samples.len() as f64)
}

/// Median of `k = ceil(8·log(1/δ))` contiguous block means, `k` clipped to
/// `[1, n]`. With `k = 1` this is the plain mean; an even `k` averages the
/// two middle block means.
pub fn median_of_means(samples: &[f64], delta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("median_of_means requires at least one sample"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let n = samples.len();
    let k = ((8.0 * (1.0 / delta).ln()).ceil() as usize).clamp(1, n);
    let mut means = Vec::with_capacity(k);
    for b in 0..k {
        let lo = b * n / k;
        let hi = (b + 1) * n / k;
        let block = &samples[lo..hi];
        means.push(block.iter().sum::<f64>() / block.len() as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).expect("block means are finite"));
    Ok(if k % 2 == 1 {
        means[k / 2]
    } else {
        0.5 * (means[k / 2 - 1] + means[k / 2])
    })
}

/// Per-arm scalar reward estimates, keyed by stable arm label.
#[derive(Debug, Clone)]
pub struct ArmEstimates {
    labels: Vec<usize>,
    values: Vec<f64>,
}

impl ArmEstimates {
    pub fn new(labels: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::domain("one estimate per label required"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("arm estimates must be finite"));
        }
        let mut seen = labels.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("arm estimate labels must be unique"));
        }
        Ok(Self { labels, values })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, label: usize) -> Option<f64> {
        self.labels.iter().position(|&l| l == label).map(|i| self.values[i])
    }
}

/// Inverse-propensity samples `aᵀ·M·x_s·y_s` for a precomputed inverse `M`,
/// one per draw, order preserving.
pub fn ips_samples(a: &[f64], inv_matrix: &Mat, draws: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
    let d = a.len();
    if inv_matrix.rows != d || inv_matrix.cols != d {
        return Err(Error::domain("inverse matrix shape does not match arm dimension"));
    }
    // w = Mᵀa, so each sample is a single dot product.
    let mut w = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            w[j] += a[i] * inv_matrix[(i, j)];
        }
    }
    let mut out = Vec::with_capacity(draws.len());
    for (x, y) in draws {
        if x.len() != d {
            return Err(Error::domain("draw dimension does not match arm dimension"));
        }
        out.push(dot(&w, x) * y);
    }
    Ok(out)
}

/// Fits `θ̂ = argmin_θ max_a |θᵀa − W^{(a)}|` over the given arms.
///
/// The Chebyshev program `min s  s.t. −s ≤ θᵀa − W^{(a)} ≤ s` is solved by
/// the dense simplex in [`crate::lp`] (variables split as θ = θ⁺ − θ⁻).
/// Optimal θ is generally non-unique; among optima the minimum-ℓ₂-norm point
/// is selected by a least-squares solve on the constraints active at the
/// optimum, accepted only if it preserves the optimal value to 1e−9.
pub fn min_distance_fit(arms: &ActionSet, estimates: &ArmEstimates) -> Result<Vec<f64>> {
    let d = arms.dim();
    let n = arms.len();
    let mut w = Vec::with_capacity(n);
    for (label, _) in arms.iter() {
        w.push(estimates.get(label).ok_or_else(|| {
            Error::domain(format!("missing estimate for arm label {label}"))
        })?);
    }

    // Variables: θ⁺ (d), θ⁻ (d), s (1). Rows: θᵀa − s ≤ W and −θᵀa − s ≤ −W.
    let nv = 2 * d + 1;
    let mut cost = vec![0.0; nv];
    cost[2 * d] = 1.0;
    let mut rows = Vec::with_capacity(2 * n);
    let mut rhs = Vec::with_capacity(2 * n);
    for (i, (_, a)) in arms.iter().enumerate() {
        let mut up = vec![0.0; nv];
        let mut lo = vec![0.0; nv];
        for j in 0..d {
            up[j] = a[j];
            up[d + j] = -a[j];
            lo[j] = -a[j];
            lo[d + j] = a[j];
        }
        up[2 * d] = -1.0;
        lo[2 * d] = -1.0;
        rows.push(up);
        rhs.push(w[i]);
        rows.push(lo);
        rhs.push(-w[i]);
    }
    let sol = lp::minimize(&cost, &rows, &rhs)?;
    let theta_lp: Vec<f64> = (0..d).map(|j| sol.x[j] - sol.x[d + j]).collect();
    let s_star = sol.objective;

    // Minimum-norm tie-break: pin the residuals that sit at ±s* and solve
    // min ‖θ‖₂ subject to those equalities.
    let mut active_rows: Vec<&[f64]> = Vec::new();
    let mut active_rhs: Vec<f64> = Vec::new();
    for (i, (_, a)) in arms.iter().enumerate() {
        let r = dot(&theta_lp, a) - w[i];
        if r.abs() >= s_star - 1e-7 {
            active_rows.push(a);
            active_rhs.push(w[i] + r.signum() * s_star);
        }
    }
    if !active_rows.is_empty() {
        if let Ok(theta_mn) = min_norm_solve(&active_rows, &active_rhs) {
            let worst = arms
                .iter()
                .enumerate()
                .map(|(i, (_, a))| (dot(&theta_mn, a) - w[i]).abs())
                .fold(0.0, f64::max);
            if worst <= s_star + 1e-9 {
                return Ok(theta_mn);
            }
        }
    }
    Ok(theta_lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_arms(d: usize) -> ActionSet {
        let arms = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect();
        ActionSet::new(d, arms).unwrap()
    }

    #[test]
    fn truncated_mean_is_plain_mean_below_threshold() {
        let cfg = TruncationConfig::new(1e6, 1.0, 0.05).unwrap();
        let m = truncated_mean(&[1.0, 2.0, 3.0], &cfg).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_mean_zeroes_large_samples() {
        // u = 1, ε = 1, δ = e⁻¹: threshold for n = 4 is (1·4/1)^{1/2} = 2,
        // so the two 3's are zeroed and the mean is (1+1)/4.
        let cfg = TruncationConfig::new(1.0, 1.0, (-1.0f64).exp()).unwrap();
        assert!((cfg.threshold(4) - 2.0).abs() < 1e-12);
        let m = truncated_mean(&[1.0, 3.0, 1.0, 3.0], &cfg).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
    }

    #[test]
    fn truncated_mean_edge_cases() {
        let cfg = TruncationConfig::new(1.0, 0.5, 0.1).unwrap();
        assert_eq!(truncated_mean(&[0.0, 0.0, 0.0], &cfg).unwrap(), 0.0);
        assert!(truncated_mean(&[], &cfg).is_err());
        assert!(TruncationConfig::new(0.0, 0.5, 0.1).is_err());
        assert!(TruncationConfig::new(1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn truncated_mean_bounded_by_threshold() {
        let cfg = TruncationConfig::new(2.0, 0.5, 0.05).unwrap();
        let samples = vec![1e9, -3.0, 2.0, 0.5, -1e4];
        let m = truncated_mean(&samples, &cfg).unwrap();
        assert!(m.abs() <= cfg.threshold(samples.len()));
    }

    #[test]
    fn median_of_means_single_block_is_mean() {
        // δ close to 1 makes k = ceil(8·log(1/δ)) = 1.
        let m = median_of_means(&[1.0, 2.0, 3.0], 0.9).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
    }

    #[test]
    fn median_of_means_rejects_outlier_block() {
        // δ = 0.7 gives k = ceil(8·0.3567) = 3 blocks of two samples each.
        let m = median_of_means(&[0.0, 0.0, 0.0, 0.0, 100.0, 100.0], 0.7).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn median_of_means_constant_samples() {
        for delta in [0.01, 0.2, 0.5, 0.99] {
            let m = median_of_means(&[4.2; 17], delta).unwrap();
            assert!((m - 4.2).abs() < 1e-12);
        }
    }

    #[test]
    fn ips_identity_transport() {
        let inv = Mat::identity(2);
        let out = ips_samples(&[1.0, 0.0], &inv, &[(vec![1.0, 0.0], 2.0)]).unwrap();
        assert_eq!(out, vec![2.0]);
    }

    #[test]
    fn ips_scaled_inverse() {
        let mut inv = Mat::identity(2);
        inv[(0, 0)] = 2.0;
        inv[(1, 1)] = 2.0;
        let draws = vec![(vec![1.0, 0.0], 1.5), (vec![0.0, 1.0], 7.0)];
        let out = ips_samples(&[1.0, 0.0], &inv, &draws).unwrap();
        assert_eq!(out, vec![3.0, 0.0]);
    }

    #[test]
    fn ips_zero_rewards_and_shape_errors() {
        let inv = Mat::identity(2);
        let draws = vec![(vec![0.3, 0.4], 0.0); 3];
        assert_eq!(ips_samples(&[1.0, 1.0], &inv, &draws).unwrap(), vec![0.0; 3]);
        assert!(ips_samples(&[1.0], &inv, &draws).is_err());
        assert!(ips_samples(&[1.0, 0.0], &inv, &[(vec![1.0], 1.0)]).is_err());
    }

    #[test]
    fn fit_interpolates_at_a_basis() {
        let arms = basis_arms(2);
        let est = ArmEstimates::new(vec![0, 1], vec![0.3, -0.2]).unwrap();
        let theta = min_distance_fit(&arms, &est).unwrap();
        assert!((theta[0] - 0.3).abs() < 1e-8);
        assert!((theta[1] + 0.2).abs() < 1e-8);
    }

    #[test]
    fn fit_single_arm_takes_min_norm_solution() {
        let arms = ActionSet::new(2, vec![vec![1.0, 0.0]]).unwrap();
        let est = ArmEstimates::new(vec![0], vec![0.5]).unwrap();
        let theta = min_distance_fit(&arms, &est).unwrap();
        assert!((theta[0] - 0.5).abs() < 1e-8);
        assert!(theta[1].abs() < 1e-8);
    }

    #[test]
    fn fit_opposed_arms_splits_the_difference() {
        let arms = ActionSet::new(1, vec![vec![1.0], vec![-1.0]]).unwrap();
        let est = ArmEstimates::new(vec![0, 1], vec![1.0, 0.0]).unwrap();
        let theta = min_distance_fit(&arms, &est).unwrap();
        assert!((theta[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn fit_objective_no_worse_than_zero() {
        // Objective at θ = 0 is max |W|; the fit must not exceed it.
        let arms = ActionSet::new(
            3,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.5, 0.5, 0.0],
                vec![0.0, 0.6, 0.8],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap();
        let est = ArmEstimates::new(vec![0, 1, 2, 3], vec![0.9, -0.4, 0.2, -0.7]).unwrap();
        let theta = min_distance_fit(&arms, &est).unwrap();
        let objective = arms
            .iter()
            .map(|(l, a)| (dot(&theta, a) - est.get(l).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(objective <= 0.9 + 1e-9);
    }

    #[test]
    fn estimates_validation() {
        assert!(ArmEstimates::new(vec![0, 0], vec![1.0, 2.0]).is_err());
        assert!(ArmEstimates::new(vec![0], vec![f64::NAN]).is_err());
        assert!(ArmEstimates::new(vec![0, 1], vec![1.0]).is_err());
    }
}
