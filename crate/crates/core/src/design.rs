//! Moment-aware experimental design over finite arm sets.
//!
//! The planning objective evaluated here is, for a sampling distribution λ
//! over the arms,
//!
//! ```text
//! M(λ) = max_a  E_{x~λ} |aᵀ A(λ)⁻¹ x|^{1+ε}  +  β^{1+ε} ‖a‖^{1+ε}_{A(λ)⁻¹},
//! A(λ) = γI + E_{x~λ}[x xᵀ],
//! ```
//!
//! which couples the classical G-optimal criterion (the ε = 1, β = 0 case)
//! with the (1+ε)-moment of the inverse-propensity samples actually fed to
//! the robust estimators. Minimization runs in two stages: a D-/G-optimal
//! Frank–Wolfe pass whose output already certifies `M ≤ 2·d^{(1+ε)/2}` on
//! spanning sets, then a best-effort projected-subgradient polish of the
//! true objective.

use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, scaled_add, Cholesky, Mat};

/// The data defining one design-evaluation problem: the active arms and the
/// (γ, β, ε) parameters of the objective.
///
/// `gamma = 0` is legal at construction but evaluation then requires the
/// candidate design's support to span the whole space.
#[derive(Debug, Clone, Copy)]
pub struct DesignProblem<'a> {
    pub arms: &'a ActionSet,
    pub gamma: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl<'a> DesignProblem<'a> {
    pub fn new(arms: &'a ActionSet, gamma: f64, beta: f64, epsilon: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must be ≥ 0, got {gamma}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("beta must be ≥ 0, got {beta}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(Self { arms, gamma, beta, epsilon })
    }
}

/// A probability vector over the arms of an [`ActionSet`], aligned
/// positionally (entry `i` weights `arms.action(i)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    weights: Vec<f64>,
}

impl Design {
    /// Validates entries ≥ 0 summing to 1 within 1e−12.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("design needs at least one weight"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("design weights must be finite and nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "design weights must sum to 1 (got {sum:.15})"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n.max(1)] }
    }

    pub fn point_mass(n: usize, idx: usize) -> Self {
        let mut w = vec![0.0; n.max(1)];
        w[idx] = 1.0;
        Self { weights: w }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Positions carrying strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Zeroes weights below 1e−15 and renormalizes; sampling code uses this
    /// so inverse-CDF lookups never land on numerically-dead atoms.
    pub fn drop_tiny(&self) -> Design {
        let mut w: Vec<f64> =
            self.weights.iter().map(|&x| if x < 1e-15 { 0.0 } else { x }).collect();
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            for x in &mut w {
                *x /= sum;
            }
        } else {
            // Degenerate all-tiny vector: fall back to uniform.
            w = vec![1.0 / w.len() as f64; w.len()];
        }
        Design { weights: w }
    }
}

/// One arm's share of the design objective, split into its two terms.
#[derive(Debug, Clone, Copy)]
pub struct ArmObjective {
    pub label: usize,
    /// `E_{x~λ} |aᵀA(λ)⁻¹x|^{1+ε}` — the inverse-propensity moment.
    pub moment_term: f64,
    /// `β^{1+ε} (aᵀA(λ)⁻¹a)^{(1+ε)/2}` — the regularization-bias term.
    pub bias_term: f64,
}

impl ArmObjective {
    pub fn total(&self) -> f64 {
        self.moment_term + self.bias_term
    }
}

fn check_compatible(problem: &DesignProblem, lambda: &Design) -> Result<()> {
    if lambda.len() != problem.arms.len() {
        return Err(Error::domain(format!(
            "design has {} weights for {} arms",
            lambda.len(),
            problem.arms.len()
        )));
    }
    Ok(())
}

/// Diagnoses a singular design covariance: reports how many dimensions the
/// weighted support actually spans.
fn singularity_error(arms: &ActionSet, lambda: &Design) -> Error {
    let d = arms.dim();
    // Modified Gram–Schmidt rank of the support arms.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &i in &lambda.support() {
        let mut v = arms.action(i).to_vec();
        let orig = dot(&v, &v).sqrt();
        for b in &basis {
            let c = dot(&v, b);
            scaled_add(&mut v, -c, b);
        }
        let res = dot(&v, &v).sqrt();
        if res > 1e-10 * (1.0 + orig) {
            for x in &mut v {
                *x /= res;
            }
            basis.push(v);
        }
    }
    let rank = basis.len();
    Error::numeric(format!(
        "design covariance is singular: support spans {rank} of {d} dimensions \
         ({}-dimensional deficient subspace); use gamma > 0 or a spanning design",
        d - rank
    ))
}

fn gram_matrix(arms: &ActionSet, weights: &[f64], gamma: f64) -> Mat {
    let d = arms.dim();
    let mut a = Mat::zeros(d, d);
    for i in 0..d {
        a[(i, i)] = gamma;
    }
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            a.add_outer(w, arms.action(j));
        }
    }
    a
}

fn factor_gram(problem: &DesignProblem, lambda: &Design) -> Result<(Mat, Cholesky)> {
    let a = gram_matrix(problem.arms, lambda.weights(), problem.gamma);
    let chol = match Cholesky::factor(&a) {
        Ok(c) => c,
        Err(_) => return Err(singularity_error(problem.arms, lambda)),
    };
    if problem.gamma == 0.0 {
        // Cholesky succeeds on barely-PD matrices; enforce the documented
        // 1e−12 eigenvalue floor by factoring the shifted matrix.
        let d = problem.arms.dim();
        let mut shifted = a.clone();
        for i in 0..d {
            shifted[(i, i)] -= 1e-12;
        }
        if Cholesky::factor(&shifted).is_err() {
            return Err(singularity_error(problem.arms, lambda));
        }
    }
    Ok((a, chol))
}

/// Builds `A(λ) = γI + Σᵢ λᵢ aᵢaᵢᵀ` together with its inverse.
///
/// A numerically singular covariance (possible only when `gamma = 0`)
/// produces an error naming the dimension of the uncovered subspace.
pub fn regularized_gram(problem: &DesignProblem, lambda: &Design) -> Result<(Mat, Mat)> {
    check_compatible(problem, lambda)?;
    let (a, chol) = factor_gram(problem, lambda)?;
    let d = problem.arms.dim();
    let mut inv = Mat::zeros(d, d);
    let mut e = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        let col = chol.solve(&e);
        e[j] = 0.0;
        for i in 0..d {
            inv[(i, j)] = col[i];
        }
    }
    Ok((a, inv))
}

/// Evaluates each arm's contribution to the objective by exact summation
/// over the support of `lambda`.
pub fn per_arm_objective(problem: &DesignProblem, lambda: &Design) -> Result<Vec<ArmObjective>> {
    check_compatible(problem, lambda)?;
    let (_, chol) = factor_gram(problem, lambda)?;
    let q = 1.0 + problem.epsilon;
    let beta_pow = problem.beta.powf(q);
    let support = lambda.support();
    let mut out = Vec::with_capacity(problem.arms.len());
    for (pos, (label, a)) in problem.arms.iter().enumerate() {
        let _ = pos;
        let w = chol.solve(a); // A⁻¹a; A symmetric, so aᵀA⁻¹x = (A⁻¹a)ᵀx
        let mut moment = 0.0;
        for &i in &support {
            let v = dot(&w, problem.arms.action(i));
            moment += lambda.weights()[i] * v.abs().powf(q);
        }
        let g = dot(&w, a);
        let bias = if beta_pow > 0.0 { beta_pow * g.max(0.0).powf(q / 2.0) } else { 0.0 };
        out.push(ArmObjective { label, moment_term: moment, bias_term: bias });
    }
    Ok(out)
}

/// `M(λ)`: the maximum over arms of moment term plus bias term.
pub fn moment_objective(problem: &DesignProblem, lambda: &Design) -> Result<f64> {
    Ok(per_arm_objective(problem, lambda)?
        .iter()
        .map(ArmObjective::total)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub const DEFAULT_DESIGN_TOL: f64 = 0.05;

/// Iteration budget that scales like `10·d·ln ln d` (the G-optimal solver's
/// convergence regime), floored at 50 so very small dimensions still get
/// enough steps to converge from arbitrary vertex configurations.
pub fn default_design_iters(d: usize) -> usize {
    let base = 10.0 * d as f64 * (d.max(3) as f64).ln().ln();
    (base.ceil() as usize).max(50)
}

/// G-optimal (equivalently D-optimal) design by Frank–Wolfe with away
/// steps.
///
/// Maximizes `log det A(λ)` from the uniform start; each iteration either
/// moves mass toward the arm with the largest leverage `g_a = ‖a‖²_{A⁻¹}`
/// or away from the support arm with the smallest, taking the classical
/// closed-form step as a seed and backtracking on the exact objective
/// (γ > 0 breaks the closed form). Stops once `max_a g_a ≤ (1+tol)·d`.
pub fn g_optimal_design(
    arms: &ActionSet,
    gamma: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Design> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("gamma must be ≥ 0, got {gamma}")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let n = arms.len();
    let d = arms.dim();
    let df = d as f64;
    let mut lambda = vec![1.0 / n as f64; n];

    let objective = |w: &[f64]| -> Option<(Cholesky, f64)> {
        let a = gram_matrix(arms, w, gamma);
        Cholesky::factor(&a).ok().map(|c| {
            let ld = c.log_det();
            (c, ld)
        })
    };

    for _ in 0..max_iters {
        let (chol, logdet) = match objective(&lambda) {
            Some(v) => v,
            None => {
                return Err(singularity_error(
                    arms,
                    &Design { weights: lambda },
                ))
            }
        };
        let mut g = Vec::with_capacity(n);
        for (_, a) in arms.iter() {
            g.push(dot(&chol.solve(a), a));
        }
        let (j_t, g_max) = g
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if g_max <= (1.0 + tol) * df {
            break;
        }
        let g_bar: f64 = lambda.iter().zip(&g).map(|(&w, &v)| w * v).sum();
        // Away candidate: the support arm with the smallest leverage.
        let mut j_a = usize::MAX;
        let mut g_min = f64::INFINITY;
        for i in 0..n {
            if lambda[i] > 0.0 && g[i] < g_min {
                g_min = g[i];
                j_a = i;
            }
        }
        let toward_gap = g_max - g_bar;
        let away_gap = g_bar - g_min;
        let use_away = j_a != usize::MAX && lambda[j_a] < 1.0 && away_gap > toward_gap;

        // Prefer the larger-gap direction, but an away step pinned to a
        // near-zero atom can be too short to clear the acceptance
        // threshold; fall back to the toward step before concluding the
        // solve has converged.
        let attempts: &[bool] = if use_away { &[true, false] } else { &[false] };
        let mut accepted = false;
        'attempts: for &away in attempts {
            let (seed, cap): (f64, f64) = if away {
                // The away step can remove at most the atom's entire
                // weight, which may itself sit below the usual seed floor.
                let cap = lambda[j_a] / (1.0 - lambda[j_a]);
                let s = if g_min > 1.0 + 1e-12 {
                    (df - g_min) / (df * (g_min - 1.0))
                } else {
                    cap
                };
                (s.clamp(1e-12f64.min(cap), cap), cap)
            } else {
                let s = (g_max - df) / (df * (g_max - 1.0));
                (s.clamp(1e-12, 1.0), 1.0)
            };

            // Backtracking on the true log-determinant.
            let mut alpha = seed.min(cap);
            while alpha > 1e-16 {
                let mut trial = lambda.clone();
                if away {
                    for (i, t) in trial.iter_mut().enumerate() {
                        *t = (1.0 + alpha) * *t - if i == j_a { alpha } else { 0.0 };
                        if *t < 0.0 {
                            *t = 0.0;
                        }
                    }
                } else {
                    for (i, t) in trial.iter_mut().enumerate() {
                        *t = (1.0 - alpha) * *t + if i == j_t { alpha } else { 0.0 };
                    }
                }
                let sum: f64 = trial.iter().sum();
                for t in &mut trial {
                    *t /= sum;
                }
                if let Some((_, ld)) = objective(&trial) {
                    if ld > logdet + 1e-14 {
                        lambda = trial;
                        accepted = true;
                        break 'attempts;
                    }
                }
                alpha *= 0.5;
            }
        }
        if !accepted {
            // Neither direction improves the objective at machine
            // precision: numerically converged.
            break;
        }
    }

    let sum: f64 = lambda.iter().sum();
    for w in &mut lambda {
        *w /= sum;
    }
    Design::from_weights(lambda)
}

/// Euclidean projection of `v` onto the probability simplex (sort-based,
/// exact up to roundoff).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Refines `init` by projected subgradient descent on `M(λ)` with
/// diminishing steps `c/√k`, tracking and returning the best iterate: the
/// result is never worse than `init`.
///
/// The subgradient at λ is the gradient of the active arm's term
/// `f_a(λ) = Σᵢ λᵢ|vᵢ|^{1+ε} + β^{1+ε} g^{(1+ε)/2}` where `vᵢ = aᵀA⁻¹xᵢ`
/// and `g = aᵀA⁻¹a`; differentiating through `A(λ)⁻¹` gives
/// `∂f/∂λⱼ = |vⱼ|^{1+ε} − (1+ε)·vⱼ·Σᵢ λᵢ|vᵢ|^ε sign(vᵢ)·xⱼᵀA⁻¹xᵢ
///           − β^{1+ε}·(1+ε)/2·g^{(ε−1)/2}·vⱼ²`.
pub fn minimize_moment_objective(
    problem: &DesignProblem,
    init: &Design,
    max_iters: usize,
    tol: f64,
) -> Result<Design> {
    check_compatible(problem, init)?;
    let n = problem.arms.len();
    let q = 1.0 + problem.epsilon;
    let beta_pow = problem.beta.powf(q);

    let mut best = init.clone();
    let mut best_val = moment_objective(problem, init)?;
    let mut lambda = init.weights().to_vec();
    let mut stall = 0usize;

    for k in 1..=max_iters {
        let current = Design { weights: lambda.clone() };
        let (_, chol) = match factor_gram(problem, &current) {
            Ok(v) => v,
            Err(_) => {
                // A subgradient step walked onto a deficient face (possible
                // only with γ = 0): retreat halfway toward the best iterate.
                for (l, b) in lambda.iter_mut().zip(best.weights()) {
                    *l = 0.5 * (*l + *b);
                }
                continue;
            }
        };

        // Identify the arm attaining the max.
        let per_arm = per_arm_objective(problem, &current)?;
        let (m_idx, m_val) = per_arm
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, o)| {
                if o.total() > acc.1 {
                    (i, o.total())
                } else {
                    acc
                }
            });
        if m_val < best_val - tol {
            stall = 0;
        } else {
            stall += 1;
            if stall >= 30 {
                break;
            }
        }
        if m_val < best_val {
            best_val = m_val;
            best = current.clone();
        }

        // Gradient of the active arm's objective.
        let a_star = problem.arms.action(m_idx);
        let w = chol.solve(a_star);
        let g = dot(&w, a_star);
        let v: Vec<f64> = (0..n).map(|j| dot(&w, problem.arms.action(j))).collect();
        // z = Σᵢ λᵢ (1+ε)|vᵢ|^ε sign(vᵢ) · A⁻¹xᵢ, so the cross term is vⱼ·xⱼᵀz.
        let mut z = vec![0.0; problem.arms.dim()];
        for i in 0..n {
            if lambda[i] > 0.0 && v[i] != 0.0 {
                let c = lambda[i] * q * v[i].abs().powf(problem.epsilon) * v[i].signum();
                scaled_add(&mut z, c, &chol.solve(problem.arms.action(i)));
            }
        }
        let bias_coef = if beta_pow > 0.0 && g > 1e-300 {
            beta_pow * (q / 2.0) * g.powf((problem.epsilon - 1.0) / 2.0)
        } else {
            0.0
        };
        let mut grad = vec![0.0; n];
        let mut gnorm2 = 0.0;
        for j in 0..n {
            let xa = problem.arms.action(j);
            let gj = v[j].abs().powf(q) - v[j] * dot(xa, &z) - bias_coef * v[j] * v[j];
            grad[j] = gj;
            gnorm2 += gj * gj;
        }
        let gnorm = gnorm2.sqrt().max(1e-12);
        let step = 0.25 / ((k as f64).sqrt() * gnorm);
        let proposal: Vec<f64> =
            lambda.iter().zip(&grad).map(|(&l, &gj)| l - step * gj).collect();
        lambda = project_simplex(&proposal);
    }

    Ok(best)
}

/// Closed-form design families supported without running a solver.
#[derive(Debug, Clone, Copy)]
pub enum SpecialCaseKind {
    /// Uniform over the canonical basis — the right design when arms live
    /// in the probability simplex.
    Simplex,
    /// Uniform over `{r·eᵢ}` for arms in an ℓp ball of radius `r`.
    LpBall { r: f64 },
}

/// Returns the support arms and the uniform design of the requested
/// closed-form family.
pub fn special_case_design(kind: SpecialCaseKind, d: usize) -> Result<(ActionSet, Design)> {
    if d == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    let scale = match kind {
        SpecialCaseKind::Simplex => 1.0,
        SpecialCaseKind::LpBall { r } => {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::domain(format!("radius must be positive, got {r}")));
            }
            r
        }
    };
    let arms: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = scale;
            e
        })
        .collect();
    let set = ActionSet::with_radius(d, arms, scale.max(1.0))?;
    Ok((set, Design::uniform(d)))
}
