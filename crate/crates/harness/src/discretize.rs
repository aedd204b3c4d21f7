//! Finite coverings of continuous action domains.
//!
//! Elimination needs a finite arm catalogue, so continuous domains are
//! replaced by grids fine enough that the covering gap is negligible: for a
//! Lipschitz-1 mean, a per-coordinate mesh of 1/T keeps the nearest-neighbor
//! mean error below 1/T, which is dominated by the regret scale. Point
//! counts are capped at 10⁶; callers should surface `capped` as a warning.

use htb_core::ActionSet;

use crate::error::{HarnessError, Result};

/// Continuous domains the harness knows how to discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuousDomain {
    /// The interval [0, 1] ⊂ ℝ¹.
    Interval,
    /// The unit circle in ℝ².
    Circle,
    /// The solid cube [0, 1]^d.
    Cube { d: usize },
}

impl ContinuousDomain {
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "interval" {
            return Ok(ContinuousDomain::Interval);
        }
        if lower == "circle" {
            return Ok(ContinuousDomain::Circle);
        }
        if let Some(dims) = lower.strip_prefix("cube") {
            let d: usize = dims.trim_matches(['-', ':', ' ']).parse().map_err(|_| {
                HarnessError::config(format!("cannot parse cube dimension from {s:?}"))
            })?;
            return Ok(ContinuousDomain::Cube { d });
        }
        Err(HarnessError::config(format!(
            "unknown domain {s:?}; expected interval, circle, or cube<d>"
        )))
    }

    fn ambient_dim(self) -> usize {
        match self {
            ContinuousDomain::Interval => 1,
            ContinuousDomain::Circle => 2,
            ContinuousDomain::Cube { d } => d,
        }
    }
}

/// Hard ceiling on catalogue size.
pub const MAX_POINTS: usize = 1_000_000;

/// A finite covering plus bookkeeping about how it was built.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub actions: ActionSet,
    /// Per-axis resolution actually used (after any cap).
    pub resolution: usize,
    /// True when the requested resolution was reduced to respect
    /// [`MAX_POINTS`].
    pub capped: bool,
}

/// Per-axis resolution so the grid spacing is at most 1/T: `T + 1` points
/// on [0, 1] give spacing exactly 1/T.
pub fn resolution_for_horizon(t_horizon: usize) -> usize {
    t_horizon.saturating_add(1).max(2)
}

/// Evenly spaced covering of `domain` with `resolution` points per axis.
pub fn discretize_action_set(
    domain: ContinuousDomain,
    resolution: usize,
) -> Result<Discretization> {
    if resolution < 2 {
        return Err(HarnessError::config(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if let ContinuousDomain::Cube { d } = domain {
        if d == 0 {
            return Err(HarnessError::config("cube dimension must be positive"));
        }
    }

    let (resolution, capped) = cap_resolution(domain, resolution);
    let points: Vec<Vec<f64>> = match domain {
        ContinuousDomain::Interval => linspace01(resolution).map(|x| vec![x]).collect(),
        ContinuousDomain::Circle => (0..resolution)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
                vec![angle.cos(), angle.sin()]
            })
            .collect(),
        ContinuousDomain::Cube { d } => {
            let mut points = Vec::with_capacity(resolution.pow(d as u32));
            let mut index = vec![0usize; d];
            loop {
                points.push(index.iter().map(|&i| grid01(i, resolution)).collect());
                // Odometer increment over the d-digit base-`resolution` index.
                let mut axis = d;
                loop {
                    if axis == 0 {
                        return finish(domain, points, resolution, capped);
                    }
                    axis -= 1;
                    index[axis] += 1;
                    if index[axis] < resolution {
                        break;
                    }
                    index[axis] = 0;
                }
            }
        }
    };
    finish(domain, points, resolution, capped)
}

fn finish(
    domain: ContinuousDomain,
    points: Vec<Vec<f64>>,
    resolution: usize,
    capped: bool,
) -> Result<Discretization> {
    let d = domain.ambient_dim();
    let radius = match domain {
        // Cube corners reach norm √d; the other domains stay in the unit ball.
        ContinuousDomain::Cube { d } => (d as f64).sqrt(),
        _ => 1.0,
    };
    let actions = ActionSet::with_radius(d, points, radius)?;
    Ok(Discretization { actions, resolution, capped })
}

/// Largest per-axis resolution whose total point count fits the cap.
fn cap_resolution(domain: ContinuousDomain, requested: usize) -> (usize, bool) {
    let axes = match domain {
        ContinuousDomain::Cube { d } => d as u32,
        _ => 1,
    };
    let fits = |r: usize| (r as u128).checked_pow(axes).is_some_and(|n| n <= MAX_POINTS as u128);
    if fits(requested) {
        return (requested, false);
    }
    let mut r = requested.min(MAX_POINTS);
    while r > 2 && !fits(r) {
        // Root-finding is overkill: shrink geometrically, then settle.
        r = if fits(r / 2) { r - 1 } else { r / 2 };
    }
    (r.max(2), true)
}

fn grid01(i: usize, resolution: usize) -> f64 {
    i as f64 / (resolution - 1) as f64
}

fn linspace01(resolution: usize) -> impl Iterator<Item = f64> {
    (0..resolution).map(move |i| grid01(i, resolution))
}
