//! Moment assumptions, linear reward instances, and pseudo-regret accounting.

use crate::actions::ActionSet;
use crate::environments::NoiseSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// The tail/moment assumptions every formula in this crate is driven by.
///
/// * `epsilon` ∈ (0, 1]: the noise has a finite (1+ε)-absolute moment.
///   ε = 1 recovers the finite-variance regime.
/// * `upsilon` ≥ 0: a certified bound on that moment, `E|η|^{1+ε} ≤ υ`.
///   Zero is allowed and means the rewards are exactly their means
///   (degenerate noise); formulas stay finite because they only ever use
///   `1 + υ`.
/// * `b` > 0: a bound on the parameter norm, `‖θ*‖₂ ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentParams {
    pub epsilon: f64,
    pub upsilon: f64,
    pub b: f64,
}

impl MomentParams {
    pub fn new(epsilon: f64, upsilon: f64, b: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain(format!(
                "epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        if !(upsilon >= 0.0) || !upsilon.is_finite() {
            return Err(Error::domain(format!(
                "upsilon must be finite and non-negative, got {upsilon}"
            )));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain(format!("b must be finite and positive, got {b}")));
        }
        Ok(Self { epsilon, upsilon, b })
    }
}

/// A stochastic linear bandit: mean reward `⟨θ*, a⟩` plus additive noise.
///
/// Means are clamped by contract to `max_a |⟨θ*, a⟩| ≤ 1`, which the noise
/// moment calibration of the estimators relies on.
#[derive(Debug, Clone)]
pub struct LinearInstance {
    theta_star: Vec<f64>,
    action_set: ActionSet,
    noise: NoiseSpec,
}

impl LinearInstance {
    pub fn new(theta_star: Vec<f64>, action_set: ActionSet, noise: NoiseSpec) -> Result<Self> {
        if theta_star.len() != action_set.dim() {
            return Err(Error::domain(format!(
                "theta has dimension {}, action set has {}",
                theta_star.len(),
                action_set.dim()
            )));
        }
        if theta_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("theta has a non-finite entry"));
        }
        let worst = (0..action_set.len())
            .map(|i| dot(&theta_star, action_set.action(i)).abs())
            .fold(0.0, f64::max);
        if worst > 1.0 + 1e-9 {
            return Err(Error::domain(format!(
                "max |<theta, a>| = {worst:.6} exceeds the unit mean bound"
            )));
        }
        noise.validate()?;
        Ok(Self { theta_star, action_set, noise })
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn action_set(&self) -> &ActionSet {
        &self.action_set
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.action_set.dim()
    }

    /// Mean reward of the arm at position `idx`.
    pub fn mean(&self, idx: usize) -> f64 {
        dot(&self.theta_star, self.action_set.action(idx))
    }

    /// Checks the declared parameter-norm bound `‖θ*‖₂ ≤ b`.
    pub fn check_norm_bound(&self, b: f64) -> Result<()> {
        let n = norm2(&self.theta_star);
        if n > b + 1e-12 {
            return Err(Error::domain(format!(
                "theta norm {n:.6} exceeds the declared bound b = {b:.6}"
            )));
        }
        Ok(())
    }
}

/// The label and value of a mean-reward maximizer, ties broken by smallest
/// label.
pub fn best_action(instance: &LinearInstance) -> (usize, f64) {
    let set = instance.action_set();
    let mut best_label = set.label(0);
    let mut best_value = instance.mean(0);
    for idx in 1..set.len() {
        let v = instance.mean(idx);
        let l = set.label(idx);
        if v > best_value || (v == best_value && l < best_label) {
            best_value = v;
            best_label = l;
        }
    }
    (best_label, best_value)
}

/// Sum of per-round gaps `⟨x*, θ*⟩ − ⟨x_t, θ*⟩` over a pulled-label sequence.
pub fn pseudo_regret(instance: &LinearInstance, action_labels: &[usize]) -> Result<f64> {
    let (_, best_value) = best_action(instance);
    let set = instance.action_set();
    let mut total = 0.0;
    for &label in action_labels {
        let idx = set
            .position_of_label(label)
            .ok_or_else(|| Error::domain(format!("unknown action label {label}")))?;
        total += best_value - instance.mean(idx);
    }
    Ok(total)
}
