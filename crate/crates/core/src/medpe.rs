//! Phased elimination with moment-aware designs.
//!
//! Each phase ℓ solves an experimental design over the surviving arms,
//! draws a budgeted number of i.i.d. actions from it, estimates every
//! arm's mean through robust inverse-propensity estimates, refits a
//! parameter vector by the minimax (Chebyshev) criterion, and discards
//! arms that fall more than `4·2^{−ℓ}` behind the front-runner. Halving
//! the accuracy target while re-budgeting each phase turns a fixed horizon
//! `T` into a `T^{1/(1+ε)}`-type regret guarantee even when the noise only
//! has a (1+ε)-th moment.

use crate::actions::ActionSet;
use crate::design::{
    default_design_iters, g_optimal_design, minimize_moment_objective, moment_objective,
    regularized_gram, Design, DesignProblem, DEFAULT_DESIGN_TOL,
};
use crate::environments::RewardEnv;
use crate::error::{Error, Result};
use crate::estimators::{
    median_of_means, min_distance_fit, truncated_mean, ArmEstimates, TruncationConfig,
};
use crate::instance::MomentParams;
use crate::linalg::dot;
use crate::record::RunRecord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which robust mean estimator turns inverse-propensity samples into
/// per-arm reward estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    TruncatedMean,
    MedianOfMeans,
}

/// Tuning of one phased-elimination run.
#[derive(Debug, Clone)]
pub struct MedPeConfig {
    pub moment: MomentParams,
    /// Gram regularizer γ; the default `T^{−2ε/(1+ε)}` balances the
    /// regularization bias against the estimation error.
    pub gamma: f64,
    /// Bias-term weight β in the design objective.
    pub beta: f64,
    pub t_horizon: usize,
    pub estimator: EstimatorKind,
    /// Stopping tolerance for the G-optimal warm start.
    pub design_tol: f64,
    /// Iteration cap for both design stages; `None` picks a budget scaled
    /// to the dimension.
    pub design_iters: Option<usize>,
    /// Multiplier on every phase budget. 1.0 runs the theoretically
    /// calibrated budgets, whose constant (32^{(1+ε)/ε}…) is far too
    /// conservative to ever eliminate an arm at practical horizons; small
    /// values let experiments reach the elimination regime. Recorded in
    /// experiment manifests.
    pub budget_scale: f64,
}

impl MedPeConfig {
    /// Defaults: γ = T^{−2ε/(1+ε)}, β = 1, truncated-mean estimates.
    pub fn new(moment: MomentParams, t_horizon: usize) -> Result<Self> {
        if t_horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        let gamma =
            (t_horizon as f64).powf(-2.0 * moment.epsilon / (1.0 + moment.epsilon));
        Ok(Self {
            moment,
            gamma,
            beta: 1.0,
            t_horizon,
            estimator: EstimatorKind::TruncatedMean,
            design_tol: DEFAULT_DESIGN_TOL,
            design_iters: None,
            budget_scale: 1.0,
        })
    }

    /// Preset for arms in the probability simplex: γ = 1/T and
    /// β = d^{(ε−1)/2}, matching the closed-form design for that geometry.
    pub fn simplex_preset(moment: MomentParams, t_horizon: usize, d: usize) -> Result<Self> {
        let mut cfg = Self::new(moment, t_horizon)?;
        cfg.gamma = 1.0 / t_horizon as f64;
        cfg.beta = (d as f64).powf((moment.epsilon - 1.0) / 2.0);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::domain(format!("gamma must be ≥ 0, got {}", self.gamma)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::domain(format!("beta must be ≥ 0, got {}", self.beta)));
        }
        if !(self.design_tol > 0.0) {
            return Err(Error::domain("design_tol must be positive"));
        }
        if !(self.budget_scale > 0.0) || !self.budget_scale.is_finite() {
            return Err(Error::domain(format!(
                "budget_scale must be positive, got {}",
                self.budget_scale
            )));
        }
        Ok(())
    }
}

/// Everything one phase committed to before sampling, plus how far into
/// the horizon the run was once the phase finished.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub ell: usize,
    /// Arms alive when the phase started.
    pub active: ActionSet,
    /// Accuracy target `2^{−ℓ}`.
    pub eps_ell: f64,
    /// The formula budget (before truncation by the remaining horizon).
    pub tau_ell: usize,
    pub design: Design,
    /// Rounds consumed in total after this phase's sampling.
    pub t_used: usize,
}

/// Per-phase diagnostics of a finished run.
#[derive(Debug, Clone)]
pub struct MedPeTrace {
    pub phases: Vec<PhaseState>,
    /// Arms never eliminated (a singleton when elimination finished early).
    pub final_active: ActionSet,
}

/// Sample budget of phase ℓ at accuracy `eps_ell` and design value
/// `m_value`:
///
/// ```text
/// τ = ⌈ 32^{(1+ε)/ε} (1+υ)^{1/ε} eps_ell^{−(1+ε)/ε} M^{1/ε} · ln(2ℓ²·n·T) ⌉
/// ```
///
/// scaled by `cfg.budget_scale`, clamped to ≥ 1 (`M = 0` collapses the
/// formula to 0 — a degenerate design measured on nothing), and saturated
/// at `T` when the exponentials overflow (ε → 0 blows up `32^{1/ε}`; a
/// budget beyond the horizon is indistinguishable from `T` anyway).
pub fn phase_budget(
    cfg: &MedPeConfig,
    eps_ell: f64,
    m_value: f64,
    ell: usize,
    n_active: usize,
) -> usize {
    let eps = cfg.moment.epsilon;
    let q = 1.0 + eps;
    // ln-space keeps 32^{(1+ε)/ε} from overflowing prematurely.
    let ln_core = (q / eps) * 32f64.ln() + (1.0 / eps) * (1.0 + cfg.moment.upsilon).ln()
        - (q / eps) * eps_ell.ln()
        + (1.0 / eps) * m_value.ln();
    let log_factor =
        (2.0 * (ell as f64).powi(2) * n_active as f64 * cfg.t_horizon as f64).ln();
    let x = ln_core.exp() * log_factor * cfg.budget_scale;
    if !x.is_finite() || x >= 9.0e18 {
        return cfg.t_horizon.max(1);
    }
    (x.ceil() as usize).max(1)
}

/// Keeps the arms within `4·eps_ell` of the best fitted value; the
/// front-runner itself always survives.
pub fn eliminate(active: &ActionSet, theta_hat: &[f64], eps_ell: f64) -> Result<ActionSet> {
    if theta_hat.len() != active.dim() {
        return Err(Error::domain(format!(
            "theta_hat has dimension {}, active set has {}",
            theta_hat.len(),
            active.dim()
        )));
    }
    if !(eps_ell > 0.0) {
        return Err(Error::domain("eps_ell must be positive"));
    }
    let values: Vec<f64> = (0..active.len())
        .map(|i| dot(theta_hat, active.action(i)))
        .collect();
    let vmax = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..active.len())
        .filter(|&i| values[i] >= vmax - 4.0 * eps_ell)
        .collect();
    active.subset(&keep)
}

fn phase_error(ell: usize, err: Error) -> Error {
    match err {
        Error::Domain(m) => Error::Domain(format!("phase {ell}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("phase {ell}: {m}")),
    }
}

/// Runs phased elimination against `env` for exactly `cfg.t_horizon`
/// rounds and returns the reward/regret trajectory.
pub fn run_medpe<E: RewardEnv>(env: &E, cfg: &MedPeConfig, seed: u64) -> Result<RunRecord> {
    run_medpe_traced(env, cfg, seed).map(|(record, _)| record)
}

/// [`run_medpe`] plus per-phase diagnostics (designs, budgets, surviving
/// arms).
///
/// The loop follows the schedule: while rounds remain and more than one
/// arm survives, solve the design for the active set, draw `τ_ℓ` actions
/// i.i.d. from it (truncated to the remaining horizon — a truncated final
/// phase still estimates and eliminates), estimate each arm's mean from
/// inverse-propensity samples at confidence `δ = 1/(2ℓ²T|A_ℓ|)`, fit θ̂,
/// and eliminate. A sole survivor is pulled for every remaining round.
pub fn run_medpe_traced<E: RewardEnv>(
    env: &E,
    cfg: &MedPeConfig,
    seed: u64,
) -> Result<(RunRecord, MedPeTrace)> {
    cfg.validate()?;
    let full = env.action_set();
    let eps = cfg.moment.epsilon;
    let upsilon = cfg.moment.upsilon;
    let t_horizon = cfg.t_horizon;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = RunRecord::new(seed);
    let best_mean = (0..full.len())
        .map(|i| env.mean_reward(full.label(i)))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut active = full.clone();
    let mut phases: Vec<PhaseState> = Vec::new();
    let mut ell = 1usize;

    while record.len() < t_horizon && active.len() > 1 {
        let eps_ell = 0.5f64.powi(ell.min(1064) as i32);
        let d = active.dim();
        let iters = cfg.design_iters.unwrap_or_else(|| default_design_iters(d));

        let problem = DesignProblem::new(&active, cfg.gamma, cfg.beta, eps)
            .map_err(|e| phase_error(ell, e))?;
        let warm = g_optimal_design(&active, cfg.gamma, iters, cfg.design_tol)
            .map_err(|e| phase_error(ell, e))?;
        let refined = minimize_moment_objective(&problem, &warm, iters, 1e-9)
            .map_err(|e| phase_error(ell, e))?;
        let design = refined.drop_tiny();
        let m_value =
            moment_objective(&problem, &design).map_err(|e| phase_error(ell, e))?;
        let tau = phase_budget(cfg, eps_ell, m_value, ell, active.len());
        let draw_count = tau.min(t_horizon - record.len());

        // Inverse-CDF sampling over the design's support.
        let mut cdf = Vec::with_capacity(design.len());
        let mut acc = 0.0;
        for &w in design.weights() {
            acc += w;
            cdf.push(acc);
        }
        let (_, inv) =
            regularized_gram(&problem, &design).map_err(|e| phase_error(ell, e))?;

        let mut draws: Vec<(usize, f64)> = Vec::with_capacity(draw_count);
        for _ in 0..draw_count {
            let u = rng.random::<f64>();
            let pos = match cdf.iter().position(|&c| u < c) {
                Some(p) => p,
                None => design.len() - 1, // u landed on trailing roundoff
            };
            let label = active.label(pos);
            let y = env.sample_reward(label, &mut rng);
            let gap = best_mean - env.mean_reward(label);
            record.push(ell, label, y, gap);
            draws.push((pos, y));
        }

        // Per-arm robust estimates from the shared sample pool. The moment
        // of an inverse-propensity sample |aᵀA⁻¹x·y|^{1+ε} is at most
        // 4(1+υ)·M(λ), which is what the truncation level must know.
        let delta = 1.0
            / (2.0 * (ell as f64).powi(2) * t_horizon as f64 * active.len() as f64);
        let u_bound = (4.0 * (1.0 + upsilon) * m_value).max(f64::MIN_POSITIVE);
        let mut labels = Vec::with_capacity(active.len());
        let mut values = Vec::with_capacity(active.len());
        for (label, a) in active.iter() {
            let w = inv.mul_vec(a);
            let leverage: Vec<f64> =
                (0..active.len()).map(|j| dot(&w, active.action(j))).collect();
            let samples: Vec<f64> =
                draws.iter().map(|&(pos, y)| leverage[pos] * y).collect();
            let est = match cfg.estimator {
                EstimatorKind::TruncatedMean => {
                    let tc = TruncationConfig::new(u_bound, eps, delta)
                        .map_err(|e| phase_error(ell, e))?;
                    truncated_mean(&samples, &tc).map_err(|e| phase_error(ell, e))?
                }
                EstimatorKind::MedianOfMeans => {
                    median_of_means(&samples, delta).map_err(|e| phase_error(ell, e))?
                }
            };
            labels.push(label);
            values.push(est);
        }
        let estimates =
            ArmEstimates::new(labels, values).map_err(|e| phase_error(ell, e))?;
        let theta_hat =
            min_distance_fit(&active, &estimates).map_err(|e| phase_error(ell, e))?;
        let survivors =
            eliminate(&active, &theta_hat, eps_ell).map_err(|e| phase_error(ell, e))?;

        phases.push(PhaseState {
            ell,
            active: active.clone(),
            eps_ell,
            tau_ell: tau,
            design,
            t_used: record.len(),
        });
        active = survivors;
        ell += 1;
    }

    if record.len() < t_horizon {
        // Only one arm can be left; it plays out the horizon.
        let label = active.label(0);
        let gap = best_mean - env.mean_reward(label);
        while record.len() < t_horizon {
            let y = env.sample_reward(label, &mut rng);
            record.push(ell, label, y, gap);
        }
    }

    Ok((record, MedPeTrace { phases, final_active: active }))
}
