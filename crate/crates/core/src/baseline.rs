//! Truncation-based linear UCB baseline (labeled `crtm-style-ucb` in all
//! outputs).
//!
//! Classic optimism with a ridge estimate, adapted to heavy tails by
//! clipping each observed reward at a level that grows like
//! `(υ·t / ln t)^{1/(1+ε)}`. The confidence width follows the
//! `d·T^{1/(1+ε)}`-regret schedule, `c · t^{(1−ε)/(2(1+ε))} √(d ln t)`.
//! This is a rate-matched stand-in for confidence-region algorithms from
//! the truncated-mean family, not a reproduction of any one of them.

use crate::environments::RewardEnv;
use crate::error::{Error, Result};
use crate::instance::MomentParams;
use crate::linalg::{dot, scaled_add, Mat};
use crate::record::RunRecord;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tuning of one truncated-UCB run.
#[derive(Debug, Clone)]
pub struct UcbConfig {
    pub moment: MomentParams,
    /// Ridge regularizer for the Gram matrix (must be positive).
    pub regularizer: f64,
    /// Confidence-width multiplier `c`.
    pub width: f64,
    /// Multiplier on the truncation level, for tuning how aggressively
    /// rewards are clipped.
    pub trunc_scale: f64,
}

impl UcbConfig {
    pub fn new(moment: MomentParams, regularizer: f64) -> Result<Self> {
        let cfg = Self { moment, regularizer, width: 1.0, trunc_scale: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.regularizer > 0.0) || !self.regularizer.is_finite() {
            return Err(Error::domain(format!(
                "regularizer must be positive, got {}",
                self.regularizer
            )));
        }
        if !(self.width >= 0.0) || !self.width.is_finite() {
            return Err(Error::domain(format!("width must be ≥ 0, got {}", self.width)));
        }
        if !(self.trunc_scale > 0.0) || !self.trunc_scale.is_finite() {
            return Err(Error::domain(format!(
                "trunc_scale must be positive, got {}",
                self.trunc_scale
            )));
        }
        Ok(())
    }
}

/// Reward clipping level at round `t` (1-based). `υ = 0` certifies
/// noiseless rewards, where clipping would only destroy signal, so the
/// level is infinite in that case.
fn truncation_level(cfg: &UcbConfig, t: usize) -> f64 {
    if cfg.moment.upsilon == 0.0 {
        return f64::INFINITY;
    }
    let tf = t as f64;
    let log_t = tf.ln().max(1.0);
    (cfg.moment.upsilon * tf / log_t).powf(1.0 / (1.0 + cfg.moment.epsilon))
        * cfg.trunc_scale
}

fn confidence_width(cfg: &UcbConfig, t: usize, d: usize) -> f64 {
    let eps = cfg.moment.epsilon;
    let tf = t as f64;
    let log_t = tf.ln().max(1.0);
    cfg.width * tf.powf((1.0 - eps) / (2.0 * (1.0 + eps))) * (d as f64 * log_t).sqrt()
}

/// Runs truncated linear UCB for `t_horizon` rounds.
///
/// Every round scores each arm by `θ̂ᵀa + width_t·‖a‖_{V_t^{−1}}` (ties to
/// the smallest index), pulls the winner, clips the observed reward, and
/// folds it into the ridge estimate via a rank-one inverse update.
pub fn run_truncated_ucb<E: RewardEnv>(
    env: &E,
    cfg: &UcbConfig,
    t_horizon: usize,
    seed: u64,
) -> Result<RunRecord> {
    cfg.validate()?;
    if t_horizon == 0 {
        return Err(Error::domain("horizon must be at least 1"));
    }
    let arms = env.action_set();
    if arms.is_empty() {
        return Err(Error::domain("action set is empty"));
    }
    let d = arms.dim();
    let n = arms.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = RunRecord::new(seed);
    let best_mean =
        (0..n).map(|i| env.mean_reward(arms.label(i))).fold(f64::NEG_INFINITY, f64::max);

    // V⁻¹ kept directly via Sherman–Morrison; per-arm quadratic forms and
    // mean scores are updated incrementally so a round costs O(d² + n·d)
    // instead of O(n·d²). The quadratic forms are recomputed from V⁻¹
    // periodically to stop rank-one roundoff from accumulating.
    let mut v_inv = Mat::identity(d);
    for x in v_inv.data.iter_mut() {
        *x /= cfg.regularizer;
    }
    let mut b = vec![0.0; d];
    let mut quad: Vec<f64> =
        (0..n).map(|i| dot(arms.action(i), &v_inv.mul_vec(arms.action(i)))).collect();
    let mut means = vec![0.0; n];

    for t in 1..=t_horizon {
        let width = confidence_width(cfg, t, d);
        let mut best_idx = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..n {
            let score = means[i] + width * quad[i].max(0.0).sqrt();
            if score > best_score {
                best_score = score;
                best_idx = i;
            }
        }

        let label = arms.label(best_idx);
        let y = env.sample_reward(label, &mut rng);
        let gap = best_mean - env.mean_reward(label);
        record.push(0, label, y, gap);

        let level = truncation_level(cfg, t);
        let y_clipped = if y.abs() <= level { y } else { 0.0 };

        let a = arms.action(best_idx);
        let u = v_inv.mul_vec(a);
        let denom = 1.0 + dot(a, &u);
        for (i, q) in quad.iter_mut().enumerate() {
            let cross = dot(arms.action(i), &u);
            *q -= cross * cross / denom;
        }
        for r in 0..d {
            for c in 0..d {
                v_inv[(r, c)] -= u[r] * u[c] / denom;
            }
        }
        scaled_add(&mut b, y_clipped, a);
        let theta = v_inv.mul_vec(&b);
        for (i, m) in means.iter_mut().enumerate() {
            *m = dot(&theta, arms.action(i));
        }
        if t % 4096 == 0 {
            for (i, q) in quad.iter_mut().enumerate() {
                *q = dot(arms.action(i), &v_inv.mul_vec(arms.action(i)));
            }
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::ActionSet;
    use crate::environments::NoiseSpec;
    use crate::instance::LinearInstance;

    fn moment(eps: f64, ups: f64) -> MomentParams {
        MomentParams::new(eps, ups, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(UcbConfig::new(moment(1.0, 0.0), 0.0).is_err());
        assert!(UcbConfig::new(moment(1.0, 0.0), 1.0).is_ok());
        let mut cfg = UcbConfig::new(moment(1.0, 0.0), 1.0).unwrap();
        cfg.trunc_scale = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn truncation_schedule() {
        let cfg = UcbConfig::new(moment(0.5, 2.0), 1.0).unwrap();
        // t = e² → level = (2e²/2)^{1/1.5} = e^{4/3}
        let t = (std::f64::consts::E * std::f64::consts::E).ceil() as usize;
        let lvl = truncation_level(&cfg, t);
        let tf = t as f64;
        let expect = (2.0 * tf / tf.ln()).powf(1.0 / 1.5);
        assert!((lvl - expect).abs() < 1e-12);
        // zero central moment → clipping disabled
        let quiet = UcbConfig::new(moment(0.5, 0.0), 1.0).unwrap();
        assert!(truncation_level(&quiet, 10).is_infinite());
    }

    #[test]
    fn single_arm_zero_regret() {
        let arms = ActionSet::new(2, vec![vec![1.0, 0.0]]).unwrap();
        let inst = LinearInstance::new(vec![0.7, 0.0], arms, NoiseSpec::Zero).unwrap();
        let cfg = UcbConfig::new(moment(1.0, 0.0), 1.0).unwrap();
        let rec = run_truncated_ucb(&inst, &cfg, 300, 5).unwrap();
        assert_eq!(rec.len(), 300);
        assert_eq!(rec.final_regret(), 0.0);
    }

    #[test]
    fn zero_noise_two_arms_settles_on_best() {
        // Small width and a loose ridge: enough optimism to try both arms
        // once, after which the exact estimates make greedy stick to the
        // winner.
        let arms = ActionSet::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let inst =
            LinearInstance::new(vec![0.2, 0.9], arms, NoiseSpec::Zero).unwrap();
        let mut cfg = UcbConfig::new(moment(1.0, 0.0), 0.01).unwrap();
        cfg.width = 0.05;
        let rec = run_truncated_ucb(&inst, &cfg, 2000, 0).unwrap();
        let tail = &rec.rounds()[10..];
        assert!(tail.iter().all(|r| r.action_label == 1), "greedy locks onto arm 1");
        assert!(rec.final_regret() <= 10.0 * 0.7);
    }

    #[test]
    fn deterministic_replay() {
        let arms = ActionSet::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let inst = LinearInstance::new(
            vec![0.3, 0.5],
            arms,
            NoiseSpec::CenteredPareto { alpha: 2.0, sigma: 1.0 },
        )
        .unwrap();
        let cfg = UcbConfig::new(moment(0.5, 2.100918962019733), 1.0).unwrap();
        let a = run_truncated_ucb(&inst, &cfg, 500, 99).unwrap();
        let b = run_truncated_ucb(&inst, &cfg, 500, 99).unwrap();
        for (x, y) in a.rounds().iter().zip(b.rounds()) {
            assert_eq!(x.action_label, y.action_label);
            assert_eq!(x.reward, y.reward);
        }
        assert_eq!(a.final_regret(), b.final_regret());
    }

    #[test]
    fn ridge_estimate_tracks_zero_noise_rewards() {
        // With every arm explored and no noise, the incrementally
        // maintained scores must match a from-scratch ridge solve.
        let arms = ActionSet::new(
            3,
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let inst =
            LinearInstance::new(vec![0.1, 0.5, 0.9], arms, NoiseSpec::Zero).unwrap();
        let mut cfg = UcbConfig::new(moment(1.0, 0.0), 0.001).unwrap();
        cfg.width = 0.01;
        let rec = run_truncated_ucb(&inst, &cfg, 5000, 1).unwrap();
        // Nearly every pull after burn-in goes to the best arm.
        let best_pulls =
            rec.rounds().iter().filter(|r| r.action_label == 2).count();
        assert!(best_pulls >= 4950, "best arm pulled {best_pulls} times");
    }
}
