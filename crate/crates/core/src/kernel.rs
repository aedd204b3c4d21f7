//! Kernelized bandits: Matérn/RBF/linear kernels, regularized quadratic
//! forms over a design without ever materializing features, and a
//! kernelized front end to the phased-elimination engine.
//!
//! The workhorse identity: for a design λ on points {x_i} and the operator
//! `A = γ·Id + Σ λ_i φ(x_i)φ(x_i)ᵀ` in feature space,
//!
//! ```text
//! φ(ψ)ᵀ A⁻¹ φ(ρ) = γ⁻¹ K(ψ,ρ) − γ⁻¹ k_λ(ψ)ᵀ (K_λ + γI)⁻¹ k_λ(ρ)
//! ```
//!
//! with `(K_λ)_{ij} = √λ_i √λ_j K(x_i,x_j)` and `k_λ(ψ)_i = √λ_i K(x_i,ψ)`
//! — a |support|-sized linear solve regardless of the feature dimension.
//! For running the full algorithm we instead compress the domain's Gram
//! matrix into explicit factor features once (pivoted Cholesky) and hand
//! those to the finite-dimensional engine; both routes agree because only
//! inner products ever enter the algorithm.

use crate::actions::ActionSet;
use crate::design::Design;
use crate::environments::{NoiseSpec, RewardEnv};
use crate::error::{Error, Result};
use crate::instance::LinearInstance;
use crate::linalg::{dot, pivoted_cholesky, Cholesky, Mat};
use crate::medpe::{run_medpe, MedPeConfig};
use crate::record::RunRecord;
use crate::special::{bessel_k, gamma};
use rand::Rng;

/// Kernel family over points in `[0,1]^d` (the linear kernel accepts any
/// finite-dimensional points).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// `exp(−‖x−y‖² / (2·lengthscale²))`.
    Rbf { lengthscale: f64 },
    /// Matérn with smoothness `nu`: closed forms for ν ∈ {1/2, 3/2, 5/2},
    /// the Bessel-function formula otherwise.
    Matern { nu: f64, lengthscale: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { lengthscale } => {
                if lengthscale > 0.0 && lengthscale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!(
                        "rbf lengthscale must be positive, got {lengthscale}"
                    )))
                }
            }
            KernelSpec::Matern { nu, lengthscale } => {
                if !(nu > 0.0) || !nu.is_finite() {
                    return Err(Error::domain(format!(
                        "matern smoothness must be positive, got {nu}"
                    )));
                }
                if !(lengthscale > 0.0) || !lengthscale.is_finite() {
                    return Err(Error::domain(format!(
                        "matern lengthscale must be positive, got {lengthscale}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Kernel value; parameters are assumed valid (see [`kernel_eval`]).
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { lengthscale } => {
                let r2: f64 =
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * lengthscale * lengthscale)).exp()
            }
            KernelSpec::Matern { nu, lengthscale } => {
                let r2: f64 =
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                matern_value(nu, r2.sqrt() / lengthscale)
            }
        }
    }
}

/// Matérn correlation at scaled distance `t = r/l`.
fn matern_value(nu: f64, t: f64) -> f64 {
    if t < 1e-14 {
        return 1.0;
    }
    if (nu - 0.5).abs() < 1e-12 {
        return (-t).exp();
    }
    if (nu - 1.5).abs() < 1e-12 {
        let s = 3f64.sqrt() * t;
        return (1.0 + s) * (-s).exp();
    }
    if (nu - 2.5).abs() < 1e-12 {
        let s = 5f64.sqrt() * t;
        return (1.0 + s + s * s / 3.0) * (-s).exp();
    }
    matern_general(nu, (2.0 * nu).sqrt() * t)
}

/// `2^{1−ν}/Γ(ν) · s^ν · K_ν(s)` for s > 0.
fn matern_general(nu: f64, s: f64) -> f64 {
    let val = 2f64.powf(1.0 - nu) / gamma(nu) * s.powf(nu) * bessel_k(nu, s);
    // Roundoff can push the correlation a hair past 1 near s = 0.
    val.clamp(0.0, 1.0)
}

/// Evaluates `K(x, y)`, validating the kernel parameters and that the two
/// points share a dimension.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(spec.eval(x, y))
}

/// Precomputed solve data for quadratic forms against one design.
///
/// Immutable after construction, so concurrent queries are safe.
#[derive(Debug, Clone)]
pub struct KernelDesignCache {
    spec: KernelSpec,
    /// Support points with their (positive) design weights.
    support: Vec<(Vec<f64>, f64)>,
    gamma: f64,
    /// Cholesky factor of `K_λ + γI` over the support.
    factor: Cholesky,
}

impl KernelDesignCache {
    /// Builds the cache for design `weights` over `points`; zero-weight
    /// points are dropped from the support. Requires `gamma > 0` (the
    /// quadratic-form identity divides by it).
    pub fn build(
        spec: &KernelSpec,
        points: &ActionSet,
        design: &Design,
        gamma: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
        }
        if design.len() != points.len() {
            return Err(Error::domain(format!(
                "design has {} weights for {} points",
                design.len(),
                points.len()
            )));
        }
        let support: Vec<(Vec<f64>, f64)> = design
            .weights()
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0)
            .map(|(i, &w)| (points.action(i).to_vec(), w))
            .collect();
        if support.is_empty() {
            return Err(Error::domain("design has empty support"));
        }
        let m = support.len();
        let mut k_lambda = Mat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = (support[i].1 * support[j].1).sqrt()
                    * spec.eval(&support[i].0, &support[j].0);
                k_lambda[(i, j)] = v;
                k_lambda[(j, i)] = v;
            }
            k_lambda[(i, i)] += gamma;
        }
        let factor = Cholesky::factor(&k_lambda).map_err(|_| {
            Error::numeric("kernel design cache: K_λ + γI failed to factor")
        })?;
        Ok(Self { spec: spec.clone(), support, gamma, factor })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// `√λ_i K(x_i, ψ)` for every support point.
    fn weighted_evals(&self, psi: &[f64]) -> Vec<f64> {
        self.support
            .iter()
            .map(|(x, w)| w.sqrt() * self.spec.eval(x, psi))
            .collect()
    }
}

/// The regularized inverse quadratic form `φ(ψ)ᵀ A^{(γ)}(λ)⁻¹ φ(ρ)`,
/// computed purely through kernel evaluations (see the module docs for
/// the identity).
pub fn kernel_quadratic_form(cache: &KernelDesignCache, psi: &[f64], rho: &[f64]) -> f64 {
    let k_psi = cache.weighted_evals(psi);
    let k_rho = cache.weighted_evals(rho);
    let solved = cache.factor.solve(&k_rho);
    (cache.spec.eval(psi, rho) - dot(&k_psi, &solved)) / cache.gamma
}

/// Kernel-side evaluation of the design objective
/// `max_a Σ_i λ_i |φ(a)ᵀA⁻¹φ(x_i)|^{1+ε} + β^{1+ε}·(φ(a)ᵀA⁻¹φ(a))^{(1+ε)/2}`
/// over all points in the set. With the linear kernel this agrees with the
/// explicit-feature design objective.
pub fn kernel_moment_objective(
    spec: &KernelSpec,
    points: &ActionSet,
    design: &Design,
    gamma: f64,
    beta: f64,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!("beta must be ≥ 0, got {beta}")));
    }
    let cache = KernelDesignCache::build(spec, points, design, gamma)?;
    let q = 1.0 + epsilon;
    let mut worst = f64::NEG_INFINITY;
    for (_, a) in points.iter() {
        let mut moment = 0.0;
        for (x, w) in &cache.support {
            moment += w * kernel_quadratic_form(&cache, a, x).abs().powf(q);
        }
        let g = kernel_quadratic_form(&cache, a, a).max(0.0);
        let total = moment + beta.powf(q) * g.powf(q / 2.0);
        worst = worst.max(total);
    }
    Ok(worst)
}

/// A function in the kernel's RKHS given by a finite expansion
/// `f(x) = Σ_j c_j K(z_j, x)`.
#[derive(Debug, Clone)]
pub struct KernelExpansion {
    anchors: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
}

impl KernelExpansion {
    pub fn new(anchors: Vec<Vec<f64>>, coeffs: Vec<f64>) -> Result<Self> {
        if anchors.len() != coeffs.len() {
            return Err(Error::domain(format!(
                "{} anchor points but {} coefficients",
                anchors.len(),
                coeffs.len()
            )));
        }
        if let Some(d) = anchors.first().map(|a| a.len()) {
            if anchors.iter().any(|a| a.len() != d) {
                return Err(Error::domain("anchor points have mixed dimensions"));
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        Ok(Self { anchors, coeffs })
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn evaluate(&self, spec: &KernelSpec, x: &[f64]) -> f64 {
        self.anchors
            .iter()
            .zip(&self.coeffs)
            .map(|(z, c)| c * spec.eval(z, x))
            .sum()
    }
}

/// Reward environment over compressed factor features: point `i` of the
/// original domain becomes row `i` of the Gram factor, with its true mean
/// carried alongside.
struct FactorEnv {
    features: ActionSet,
    means: Vec<f64>,
    noise: NoiseSpec,
}

impl RewardEnv for FactorEnv {
    fn action_set(&self) -> &ActionSet {
        &self.features
    }

    fn mean_reward(&self, label: usize) -> f64 {
        self.means[label]
    }

    fn sample_reward<R: Rng>(&self, label: usize, rng: &mut R) -> f64 {
        self.means[label] + self.noise.sample_unchecked(rng)
    }
}

/// Phased elimination over a kernelized reward `f(x) + noise`, `f` given
/// as a kernel expansion with `max_x |f(x)| ≤ 1` over the domain points.
///
/// The linear kernel reduces exactly to [`run_medpe`] on the instance
/// `θ = Σ_j c_j z_j` — same seed, same trajectory. Other kernels compress
/// the domain's Gram matrix `K = ΦΦᵀ` by pivoted Cholesky and run the
/// engine on the factor rows `Φ`; every Gram-matrix inverse and design
/// objective the engine touches is preserved by construction. Action
/// labels in the returned record index `domain_points`.
pub fn run_kernel_medpe(
    domain_points: &ActionSet,
    f_star: &KernelExpansion,
    noise: &NoiseSpec,
    spec: &KernelSpec,
    cfg: &MedPeConfig,
    seed: u64,
) -> Result<RunRecord> {
    spec.validate()?;
    noise.validate()?;
    if !f_star.anchors.is_empty() && f_star.anchors[0].len() != domain_points.dim() {
        return Err(Error::domain(format!(
            "anchor dimension {} does not match domain dimension {}",
            f_star.anchors[0].len(),
            domain_points.dim()
        )));
    }
    let means: Vec<f64> =
        (0..domain_points.len()).map(|i| f_star.evaluate(spec, domain_points.action(i))).collect();
    let sup = means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > 1.0 + 1e-9 {
        return Err(Error::domain(format!(
            "|f| reaches {sup:.6} on the domain; expansions must be bounded by 1"
        )));
    }

    if let KernelSpec::Linear = spec {
        let d = domain_points.dim();
        let mut theta = vec![0.0; d];
        for (z, c) in f_star.anchors.iter().zip(&f_star.coeffs) {
            for j in 0..d {
                theta[j] += c * z[j];
            }
        }
        let instance =
            LinearInstance::new(theta, domain_points.clone(), *noise)?;
        return run_medpe(&instance, cfg, seed);
    }

    let n = domain_points.len();
    let mut gram = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval(domain_points.action(i), domain_points.action(j));
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let phi = pivoted_cholesky(&gram, 1e-12)?;
    if phi.cols == 0 {
        return Err(Error::numeric("domain Gram matrix is numerically zero"));
    }
    let rows: Vec<Vec<f64>> =
        (0..n).map(|i| phi.row(i).to_vec()).collect();
    let max_norm = rows
        .iter()
        .map(|r| dot(r, r).sqrt())
        .fold(0.0f64, f64::max);
    let radius = if max_norm > 0.0 { max_norm } else { 1.0 };
    let features = ActionSet::with_radius(phi.cols, rows, radius)?;
    let env = FactorEnv { features, means, noise: *noise };
    run_medpe(&env, cfg, seed)
}

/// Growth bound on the moment objective of Matérn-kernel designs at
/// regularization `γ = T^{−2ε/(1+ε)}`: the value scales like
/// `T^{ε·d/(2ν+d)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternDesignBound {
    /// Exponent `ε·d/(2ν+d)` of the horizon.
    pub exponent: f64,
    /// `T^exponent` at the requested horizon.
    pub value_at_t: f64,
}

/// Evaluates the Matérn design-complexity exponent `ε·d/(2ν+d)` and its
/// value at horizon `t`.
pub fn matern_design_bound(
    nu: f64,
    d: usize,
    epsilon: f64,
    t: f64,
) -> Result<MaternDesignBound> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::domain(format!("smoothness must be positive, got {nu}")));
    }
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("horizon must be positive, got {t}")));
    }
    let exponent = epsilon * d as f64 / (2.0 * nu + d as f64);
    Ok(MaternDesignBound { exponent, value_at_t: t.powf(exponent) })
}
