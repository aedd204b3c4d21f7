//! Reward environments: heavy-tailed noise generators, finite-support hard
//! instances whose (1+ε)-moment is certified analytically, and action-set
//! factories.
//!
//! The hard instances all share one trick: rewards are supported on two or
//! three atoms with a large value `γ^{−1/ε}` taken with a small probability
//! proportional to the mean. That keeps `E[y] = θᵀx` exactly while pushing
//! the (1+ε)-moment right up to its permitted ceiling — the regime where
//! gap Δ, regularizer scale γ, and horizon T trade off most unfavourably
//! for any learner.

use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::instance::LinearInstance;
use crate::linalg::{dot, norm2};
use crate::special::{adaptive_simpson, gamma as gamma_fn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT as StudentTDist};

/// Additive noise distributions, all centered (zero mean).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// Pareto II (Lomax) with survival `(1 + p/σ)^{−α}`, shifted by its
    /// mean `σ/(α−1)`. For `α = 2` every moment of order ≥ 2 is infinite
    /// while the (1+ε)-moment stays finite for all ε < 1.
    CenteredPareto { alpha: f64, sigma: f64 },
    /// Student's t with `df > 1` degrees of freedom.
    StudentT { df: f64 },
    Gaussian { sigma: f64 },
    Zero,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::CenteredPareto { alpha, sigma } => {
                if !(alpha > 1.0) || !alpha.is_finite() {
                    return Err(Error::domain(format!(
                        "pareto alpha must exceed 1 (the mean must exist), got {alpha}"
                    )));
                }
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::domain(format!("pareto sigma must be positive, got {sigma}")));
                }
            }
            NoiseSpec::StudentT { df } => {
                if !(df > 1.0) || !df.is_finite() {
                    return Err(Error::domain(format!(
                        "student-t df must exceed 1 (the mean must exist), got {df}"
                    )));
                }
            }
            NoiseSpec::Gaussian { sigma } => {
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(Error::domain(format!("gaussian sigma must be ≥ 0, got {sigma}")));
                }
            }
            NoiseSpec::Zero => {}
        }
        Ok(())
    }

    /// One draw. Callers must have validated the spec (environment
    /// constructors do); invalid parameters here are a programmer error.
    pub(crate) fn sample_unchecked<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::CenteredPareto { alpha, sigma } => {
                // Inverse survival: u uniform on (0,1], P = σ(u^{−1/α} − 1).
                let u = 1.0 - rng.random::<f64>();
                sigma * (u.powf(-1.0 / alpha) - 1.0) - sigma / (alpha - 1.0)
            }
            NoiseSpec::StudentT { df } => {
                StudentTDist::new(df).expect("validated df").sample(rng)
            }
            NoiseSpec::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                z * sigma
            }
            NoiseSpec::Zero => 0.0,
        }
    }

    /// Analytic `E|η|^{1+ε}`, or `None` when that moment is infinite.
    ///
    /// Student-t and Gaussian moments come from the closed-form gamma-
    /// function expressions. The centered Pareto moment has no elementary
    /// closed form; it is integrated adaptively, with the tail mapped onto
    /// a compact interval by `u = σ/(σ+p)` followed by `u = z^β` to remove
    /// the endpoint singularity (β chosen so the integrand vanishes at
    /// least linearly at 0).
    pub fn moment_bound(&self, epsilon: f64) -> Result<Option<f64>> {
        self.validate()?;
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        let q = 1.0 + epsilon;
        let sqrt_pi = std::f64::consts::PI.sqrt();
        Ok(match *self {
            NoiseSpec::Zero => Some(0.0),
            NoiseSpec::Gaussian { sigma } => {
                Some(sigma.powf(q) * 2f64.powf(q / 2.0) * gamma_fn((q + 1.0) / 2.0) / sqrt_pi)
            }
            NoiseSpec::StudentT { df } => {
                if q >= df {
                    None
                } else {
                    Some(
                        df.powf(q / 2.0) * gamma_fn((q + 1.0) / 2.0)
                            * gamma_fn((df - q) / 2.0)
                            / (sqrt_pi * gamma_fn(df / 2.0)),
                    )
                }
            }
            NoiseSpec::CenteredPareto { alpha, sigma } => {
                if q >= alpha {
                    None
                } else {
                    let mu = sigma / (alpha - 1.0);
                    let density =
                        |p: f64| (alpha / sigma) * (1.0 + p / sigma).powf(-alpha - 1.0);
                    let head = adaptive_simpson(
                        &|p| (mu - p).powf(q) * density(p),
                        0.0,
                        mu,
                        1e-12,
                    );
                    // Tail ∫_μ^∞ (p−μ)^q f(p) dp = αβ ∫_0^{z0} s(z)^q z^{βα−1} dz
                    // with s(z) = σz^{−β} − (σ+μ), z0 = (σ/(σ+μ))^{1/β}.
                    let beta = ((2.0 / (alpha - q)).ceil() as usize).clamp(1, 1024) as f64;
                    let z0 = (sigma / (sigma + mu)).powf(1.0 / beta);
                    let zexp = beta * alpha - 1.0;
                    let g = |z: f64| {
                        if z <= 0.0 {
                            return 0.0;
                        }
                        let s = sigma * z.powf(-beta) - (sigma + mu);
                        if s <= 0.0 {
                            return 0.0;
                        }
                        (q * s.ln() + zexp * z.ln()).exp()
                    };
                    let tail = alpha * beta * adaptive_simpson(&g, 0.0, z0, 1e-12);
                    Some(head + tail)
                }
            }
        })
    }
}

/// One centered noise draw; validates the spec first.
pub fn sample_noise<R: Rng>(spec: &NoiseSpec, rng: &mut R) -> Result<f64> {
    spec.validate()?;
    Ok(spec.sample_unchecked(rng))
}

/// What a bandit algorithm is allowed to see: the arm catalogue, plus
/// per-arm reward sampling. Mean rewards are exposed for regret accounting
/// only — algorithms must not peek.
///
/// Arms are addressed by *label*, which for a full environment action set
/// coincides with position; labels stay stable when algorithms work on
/// shrinking subsets.
pub trait RewardEnv {
    fn action_set(&self) -> &ActionSet;
    fn mean_reward(&self, label: usize) -> f64;
    fn sample_reward<R: Rng>(&self, label: usize, rng: &mut R) -> f64;
}

impl RewardEnv for LinearInstance {
    fn action_set(&self) -> &ActionSet {
        self.action_set()
    }

    fn mean_reward(&self, label: usize) -> f64 {
        self.mean(label)
    }

    fn sample_reward<R: Rng>(&self, label: usize, rng: &mut R) -> f64 {
        self.mean(label) + self.noise().sample_unchecked(rng)
    }
}

/// Which hard-instance family a [`BernoulliRewardInstance`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFlavor {
    /// Paired hypercube coordinates, one active coordinate per pair.
    HypercubePair,
    /// Block one-hot actions — a small action catalogue of size ≤ n.
    GroupedFinite,
    /// Unit-ball arms with a three-atom reward law.
    UnitBall3,
}

/// A linear bandit whose rewards live on two or three atoms.
///
/// The law at action `x` is
///
/// ```text
/// y = γ^{−1/ε}  w.p.  γ^{1/ε}·(θᵀx + shift)
/// y = −1        w.p.  shift            (only when shift > 0)
/// y = 0         otherwise
/// ```
///
/// so `E[y] = θᵀx` exactly for every action, while the raw (1+ε)-moment
/// equals `γ^{−1}(θᵀx + shift) + shift` — calibrated to stay ≤ 1 at the
/// most extreme action.
#[derive(Debug, Clone)]
pub struct BernoulliRewardInstance {
    theta: Vec<f64>,
    epsilon: f64,
    gamma_scale: f64,
    delta_gap: f64,
    shift: f64,
    value_plus: f64, // γ^{−1/ε}
    prob_scale: f64, // γ^{1/ε}
    action_set: ActionSet,
    flavor: InstanceFlavor,
}

impl BernoulliRewardInstance {
    fn build(
        theta: Vec<f64>,
        epsilon: f64,
        gamma_scale: f64,
        delta_gap: f64,
        shift: f64,
        action_set: ActionSet,
        flavor: InstanceFlavor,
    ) -> Result<Self> {
        if theta.len() != action_set.dim() {
            return Err(Error::domain("theta dimension does not match actions"));
        }
        let inst = Self {
            theta,
            epsilon,
            gamma_scale,
            delta_gap,
            shift,
            value_plus: gamma_scale.powf(-1.0 / epsilon),
            prob_scale: gamma_scale.powf(1.0 / epsilon),
            action_set,
            flavor,
        };
        for pos in 0..inst.action_set.len() {
            let [(_, p_plus), (_, p_minus), (_, p_zero)] = inst.atoms(pos);
            for p in [p_plus, p_minus, p_zero] {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(Error::domain(format!(
                        "reward probability {p:.6e} escapes [0,1] at action {pos} \
                         (the gap is too large for this horizon)"
                    )));
                }
            }
        }
        Ok(inst)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The construction's γ: reward values scale as `γ^{−1/ε}`.
    pub fn gamma_scale(&self) -> f64 {
        self.gamma_scale
    }

    /// The construction's Δ — the per-coordinate mean separation.
    pub fn delta_gap(&self) -> f64 {
        self.delta_gap
    }

    pub fn flavor(&self) -> InstanceFlavor {
        self.flavor
    }

    pub fn mean(&self, pos: usize) -> f64 {
        dot(&self.theta, self.action_set.action(pos))
    }

    /// The support as `(value, probability)` triples: the `γ^{−1/ε}` atom,
    /// the `−1` atom (probability 0 for two-point flavors), then 0.
    pub fn atoms(&self, pos: usize) -> [(f64, f64); 3] {
        let p_plus = self.prob_scale * (self.mean(pos) + self.shift);
        let p_minus = self.shift;
        [
            (self.value_plus, p_plus),
            (-1.0, p_minus),
            (0.0, 1.0 - p_plus - p_minus),
        ]
    }

    /// Exact `E|y|^{1+ε}` at an action, by summation over the atoms.
    pub fn raw_moment(&self, pos: usize) -> f64 {
        let q = 1.0 + self.epsilon;
        self.atoms(pos).iter().map(|&(v, p)| p * v.abs().powf(q)).sum()
    }

    /// Exact central moment `E|y − E[y]|^{1+ε}` at an action.
    pub fn central_moment(&self, pos: usize) -> f64 {
        let q = 1.0 + self.epsilon;
        let m = self.mean(pos);
        self.atoms(pos).iter().map(|&(v, p)| p * (v - m).abs().powf(q)).sum()
    }
}

impl RewardEnv for BernoulliRewardInstance {
    fn action_set(&self) -> &ActionSet {
        &self.action_set
    }

    fn mean_reward(&self, label: usize) -> f64 {
        self.mean(label)
    }

    fn sample_reward<R: Rng>(&self, label: usize, rng: &mut R) -> f64 {
        let [(v_plus, p_plus), (_, p_minus), _] = self.atoms(label);
        let u = rng.random::<f64>();
        if u < p_plus {
            v_plus
        } else if u < p_plus + p_minus {
            -1.0
        } else {
            0.0
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(())
}

/// Paired-coordinate instance with an explicitly chosen gap Δ.
///
/// Actions are the `2^d` vectors in `{0,1}^{2d}` with exactly one active
/// coordinate per pair `(2i, 2i+1)`. Parameter bit `i` of `theta_index`
/// orients pair `i` of θ: bit 0 gives `(Δ, 2Δ)`, bit 1 gives `(2Δ, Δ)`;
/// every pair sums to 3Δ, so all `2^d` parameter choices are mutually
/// hard to distinguish. Rewards follow the two-point law with `γ = 2dΔ`.
pub fn hypercube_pair_with_delta(
    d: usize,
    epsilon: f64,
    delta: f64,
    theta_index: u64,
) -> Result<BernoulliRewardInstance> {
    check_epsilon(epsilon)?;
    if d == 0 {
        return Err(Error::domain("d must be positive"));
    }
    if d > 19 {
        return Err(Error::domain(format!(
            "d = {d} would create 2^{d} actions; the explicit catalogue is capped at 2^19"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    let quarter = 1.0 / (4.0 * d as f64);
    if delta > quarter {
        return Err(Error::domain(format!(
            "delta {delta:.6e} exceeds the admissible ceiling 1/(4d) = {quarter:.6e}"
        )));
    }
    if theta_index >= 1u64 << d {
        return Err(Error::domain(format!(
            "theta_index {theta_index} out of range (need < 2^{d})"
        )));
    }
    let mut theta = vec![0.0; 2 * d];
    for i in 0..d {
        let flipped = (theta_index >> i) & 1 == 1;
        let (lo, hi) = if flipped { (2.0, 1.0) } else { (1.0, 2.0) };
        theta[2 * i] = lo * delta;
        theta[2 * i + 1] = hi * delta;
    }
    let mut actions = Vec::with_capacity(1 << d);
    for code in 0..(1u64 << d) {
        let mut x = vec![0.0; 2 * d];
        for i in 0..d {
            let b = ((code >> i) & 1) as usize;
            x[2 * i + b] = 1.0;
        }
        actions.push(x);
    }
    let set = ActionSet::with_radius(2 * d, actions, (d as f64).sqrt())?;
    let gamma = 2.0 * d as f64 * delta;
    BernoulliRewardInstance::build(
        theta,
        epsilon,
        gamma,
        delta,
        0.0,
        set,
        InstanceFlavor::HypercubePair,
    )
}

/// Paired-coordinate instance with the gap calibrated to the horizon:
/// `Δ = ½·d^{(ε−1)/(1+ε)}·T^{−ε/(1+ε)}`, requiring `T ≥ 4^{(1+ε)/ε}·d²`.
pub fn hypercube_pair_instance(
    d: usize,
    epsilon: f64,
    t_horizon: usize,
    theta_index: u64,
) -> Result<BernoulliRewardInstance> {
    check_epsilon(epsilon)?;
    if d == 0 {
        return Err(Error::domain("d must be positive"));
    }
    let q = 1.0 + epsilon;
    let t = t_horizon as f64;
    let t_min = 4f64.powf(q / epsilon) * (d as f64).powi(2);
    if t < t_min {
        return Err(Error::domain(format!(
            "horizon {t_horizon} below the hardness threshold 4^((1+ε)/ε)·d² = {t_min:.1} \
             for d = {d}, ε = {epsilon}"
        )));
    }
    let delta = 0.5 * (d as f64).powf((epsilon - 1.0) / q) * t.powf(-epsilon / q);
    hypercube_pair_with_delta(d, epsilon, delta, theta_index)
}

/// Block-structured instance with at most `n` actions.
///
/// Coordinates are grouped into blocks of size `m`, the smallest integer
/// in `4..=d` with `m/log₂m ≥ d/log₂n`; an action activates exactly one
/// coordinate per block, so the catalogue has `m^(d'/m) ≤ n` entries
/// (`d' = d − d mod m` coordinates are used, the remainder stays zero).
/// θ places `2Δ` on one coordinate per block (chosen by the mixed-radix
/// digits of `theta_index`) and `Δ` on the rest.
pub fn grouped_finite_instance(
    d: usize,
    epsilon: f64,
    n: usize,
    t_horizon: usize,
    theta_index: u64,
) -> Result<BernoulliRewardInstance> {
    check_epsilon(epsilon)?;
    if d == 0 {
        return Err(Error::domain("d must be positive"));
    }
    if n < d.max(2) {
        return Err(Error::domain(format!(
            "action budget n = {n} must be at least max(d, 2) = {}",
            d.max(2)
        )));
    }
    let q = 1.0 + epsilon;
    let t = t_horizon as f64;
    let t_min = (4.0 * d as f64).powf(q / epsilon);
    if t < t_min {
        return Err(Error::domain(format!(
            "horizon {t_horizon} below the hardness threshold (4d)^((1+ε)/ε) = {t_min:.1}"
        )));
    }
    let ratio = d as f64 / (n as f64).log2();
    let m = (4..=d)
        .find(|&m| m as f64 / (m as f64).log2() >= ratio)
        .ok_or_else(|| {
            Error::domain(format!(
                "no feasible block size m in 4..={d} satisfies m/log₂m ≥ d/log₂n = {ratio:.3}; \
                 increase n or d"
            ))
        })?;
    let d_used = d - d % m;
    let blocks = d_used / m;
    let bits = blocks as f64 * (m as f64).log2();
    if bits > 20.0 {
        return Err(Error::domain(format!(
            "catalogue of m^blocks = {m}^{blocks} actions exceeds the 2^20 cap"
        )));
    }
    let count = (m as u64).pow(blocks as u32);
    debug_assert!(
        bits <= (n as f64).log2() + 1e-9,
        "block-size selection must keep the catalogue within n"
    );
    if theta_index >= count {
        return Err(Error::domain(format!(
            "theta_index {theta_index} out of range (need < {count})"
        )));
    }
    let delta =
        0.125 * (blocks as f64).powf((epsilon - 1.0) / q) * (t / m as f64).powf(-epsilon / q);
    let gamma = 2.0 * delta * blocks as f64;

    let mut theta = vec![0.0; d];
    let mut idx = theta_index;
    for b in 0..blocks {
        let digit = (idx % m as u64) as usize;
        idx /= m as u64;
        for j in 0..m {
            theta[b * m + j] = if j == digit { 2.0 * delta } else { delta };
        }
    }
    let mut actions = Vec::with_capacity(count as usize);
    for code in 0..count {
        let mut x = vec![0.0; d];
        let mut c = code;
        for b in 0..blocks {
            let digit = (c % m as u64) as usize;
            c /= m as u64;
            x[b * m + digit] = 1.0;
        }
        actions.push(x);
    }
    let set = ActionSet::with_radius(d, actions, (blocks as f64).sqrt())?;
    BernoulliRewardInstance::build(
        theta,
        epsilon,
        gamma,
        delta,
        0.0,
        set,
        InstanceFlavor::GroupedFinite,
    )
}

/// Unit-ball instance with the three-atom law.
///
/// θ = Δ·signs with `Δ = 24^{−1/(1+ε)}·d^{(3ε−1)/(2(1+ε))}·(288T)^{−ε/(1+ε)}`
/// and `γ = 24√d·Δ`; the reward adds a `−1` atom of probability `2√d·Δ`
/// whose pull exactly cancels the shift inside the positive atom, keeping
/// `E[y] = θᵀx`. The continuous ball is discretized to `θ/‖θ‖`, the signed
/// axes, and `n_sphere` seeded random unit vectors.
pub fn unit_ball_instance(
    d: usize,
    epsilon: f64,
    t_horizon: usize,
    theta_signs: &[f64],
    n_sphere: usize,
    seed: u64,
) -> Result<BernoulliRewardInstance> {
    check_epsilon(epsilon)?;
    if d == 0 {
        return Err(Error::domain("d must be positive"));
    }
    if theta_signs.len() != d {
        return Err(Error::domain(format!(
            "theta_signs has length {}, expected {d}",
            theta_signs.len()
        )));
    }
    if theta_signs.iter().any(|s| s.abs() != 1.0) {
        return Err(Error::domain("theta_signs entries must be ±1"));
    }
    let t = t_horizon as f64;
    if t < (d as f64).powi(2) {
        return Err(Error::domain(format!(
            "horizon {t_horizon} below the hardness threshold d² = {}",
            d * d
        )));
    }
    let q = 1.0 + epsilon;
    let df = d as f64;
    let delta = 24f64.powf(-1.0 / q)
        * df.powf((3.0 * epsilon - 1.0) / (2.0 * q))
        * (288.0 * t).powf(-epsilon / q);
    let theta: Vec<f64> = theta_signs.iter().map(|&s| s * delta).collect();
    let norm = norm2(&theta);
    let mut actions = vec![theta.iter().map(|&v| v / norm).collect::<Vec<f64>>()];
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        actions.push(e.clone());
        e[i] = -1.0;
        actions.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_sphere {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = norm2(&v);
            if n > 1e-9 {
                actions.push(v.into_iter().map(|x| x / n).collect());
                break;
            }
        }
    }
    let set = ActionSet::new(d, actions)?;
    let shift = 2.0 * df.sqrt() * delta;
    let gamma = 24.0 * df.sqrt() * delta;
    BernoulliRewardInstance::build(
        theta,
        epsilon,
        gamma,
        delta,
        shift,
        set,
        InstanceFlavor::UnitBall3,
    )
}

/// Recipes for building finite action sets.
#[derive(Debug, Clone)]
pub enum ActionSetKind {
    /// Canonical basis `{e_i}`.
    SimplexBasis,
    /// Signed directions interleaved: `{e1, −e1, e2, −e2, …}`.
    SignedBasis,
    /// Regular grid on `[−r, r]^d` filtered to the ℓp ball of radius `r`.
    LpBallGrid { p: f64, r: f64, points_per_axis: usize },
    /// Uniform random directions on the unit sphere.
    SphereRandom { count: usize },
    /// Uniform random points in the solid cube `[0,1]^d`.
    HypercubeRandom { count: usize },
    /// Caller-supplied vectors.
    Explicit(Vec<Vec<f64>>),
}

/// Builds an action set; deterministic for a given `(kind, d, seed)`.
pub fn make_action_set(kind: &ActionSetKind, d: usize, seed: u64) -> Result<ActionSet> {
    if d == 0 {
        return Err(Error::domain("d must be positive"));
    }
    let basis = |i: usize, v: f64| {
        let mut e = vec![0.0; d];
        e[i] = v;
        e
    };
    match kind {
        ActionSetKind::SimplexBasis => {
            ActionSet::new(d, (0..d).map(|i| basis(i, 1.0)).collect())
        }
        ActionSetKind::SignedBasis => {
            let mut arms = Vec::with_capacity(2 * d);
            for i in 0..d {
                arms.push(basis(i, 1.0));
                arms.push(basis(i, -1.0));
            }
            ActionSet::new(d, arms)
        }
        ActionSetKind::LpBallGrid { p, r, points_per_axis } => {
            if !(*p >= 1.0) || !p.is_finite() {
                return Err(Error::domain(format!("lp exponent must be ≥ 1, got {p}")));
            }
            if !(*r > 0.0) || !r.is_finite() {
                return Err(Error::domain(format!("radius must be positive, got {r}")));
            }
            let ppa = *points_per_axis;
            if ppa < 2 {
                return Err(Error::domain("points_per_axis must be at least 2"));
            }
            if (ppa as f64).powi(d as i32) > 1e6 {
                return Err(Error::domain(format!(
                    "grid of {ppa}^{d} points exceeds the 10^6 cap"
                )));
            }
            let axis: Vec<f64> =
                (0..ppa).map(|k| -r + 2.0 * r * k as f64 / (ppa - 1) as f64).collect();
            let mut arms = Vec::new();
            let mut odometer = vec![0usize; d];
            loop {
                let x: Vec<f64> = odometer.iter().map(|&k| axis[k]).collect();
                let lp = x.iter().map(|v| v.abs().powf(*p)).sum::<f64>().powf(1.0 / *p);
                if lp <= r + 1e-12 {
                    arms.push(x);
                }
                // increment
                let mut pos = 0;
                loop {
                    if pos == d {
                        break;
                    }
                    odometer[pos] += 1;
                    if odometer[pos] < ppa {
                        break;
                    }
                    odometer[pos] = 0;
                    pos += 1;
                }
                if pos == d {
                    break;
                }
            }
            if arms.is_empty() {
                return Err(Error::domain(
                    "grid contains no point inside the ball; increase points_per_axis",
                ));
            }
            ActionSet::with_radius(d, arms, *r)
        }
        ActionSetKind::SphereRandom { count } => {
            if *count == 0 {
                return Err(Error::domain("count must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut arms = Vec::with_capacity(*count);
            for _ in 0..*count {
                loop {
                    let v: Vec<f64> =
                        (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = norm2(&v);
                    if n > 1e-9 {
                        arms.push(v.into_iter().map(|x| x / n).collect());
                        break;
                    }
                }
            }
            ActionSet::new(d, arms)
        }
        ActionSetKind::HypercubeRandom { count } => {
            if *count == 0 {
                return Err(Error::domain("count must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let arms = (0..*count)
                .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
                .collect();
            ActionSet::with_radius(d, arms, (d as f64).sqrt())
        }
        ActionSetKind::Explicit(list) => {
            let max_norm = list.iter().map(|a| norm2(a)).fold(0.0f64, f64::max);
            ActionSet::with_radius(d, list.clone(), if max_norm > 0.0 { max_norm } else { 1.0 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(sample_noise(&NoiseSpec::Zero, &mut rng).unwrap(), 0.0);
        }
        assert_eq!(NoiseSpec::Zero.moment_bound(0.5).unwrap(), Some(0.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_noise(&NoiseSpec::StudentT { df: 1.0 }, &mut rng).is_err());
        assert!(sample_noise(&NoiseSpec::CenteredPareto { alpha: 1.0, sigma: 1.0 }, &mut rng)
            .is_err());
        assert!(sample_noise(&NoiseSpec::Gaussian { sigma: -1.0 }, &mut rng).is_err());
        assert!(NoiseSpec::Zero.moment_bound(0.0).is_err());
        assert!(NoiseSpec::Zero.moment_bound(1.5).is_err());
    }

    #[test]
    fn pareto_moment_matches_quadrature_oracles() {
        // Oracle values computed with 30-digit arbitrary-precision
        // quadrature of ∫|p − μ|^{1+ε} (α/σ)(1+p/σ)^{−α−1} dp.
        let cases = [
            (2.0, 1.0, 0.5, 2.100918962019733),
            (2.0, 1.0, 0.3, 1.3906826686492294),
            (3.0, 2.0, 1.0, 3.0), // equals the Lomax variance σ²α/((α−1)²(α−2))
            (1.5, 0.7, 0.2, 2.5663361900986446),
        ];
        for (alpha, sigma, eps, want) in cases {
            let got = NoiseSpec::CenteredPareto { alpha, sigma }
                .moment_bound(eps)
                .unwrap()
                .unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "pareto({alpha},{sigma}) ε={eps}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn infinite_moments_reported_as_none() {
        let pareto2 = NoiseSpec::CenteredPareto { alpha: 2.0, sigma: 1.0 };
        assert_eq!(pareto2.moment_bound(1.0).unwrap(), None); // 2nd moment infinite
        assert!(pareto2.moment_bound(0.99).unwrap().is_some());
        let t = NoiseSpec::StudentT { df: 1.5 };
        assert_eq!(t.moment_bound(0.5).unwrap(), None); // q = 1.5 = df
        assert!(t.moment_bound(0.4).unwrap().is_some());
    }

    #[test]
    fn student_and_gaussian_closed_forms() {
        let got = NoiseSpec::StudentT { df: 3.0 }.moment_bound(0.5).unwrap().unwrap();
        assert!((got - 1.6118548977353129).abs() < 1e-10, "{got}");
        let got = NoiseSpec::StudentT { df: 2.5 }.moment_bound(0.4).unwrap().unwrap();
        assert!((got - 1.7541197636424005).abs() < 1e-10, "{got}");
        let got = NoiseSpec::Gaussian { sigma: 1.0 }.moment_bound(1.0).unwrap().unwrap();
        assert!((got - 1.0).abs() < 1e-12, "{got}");
        let got = NoiseSpec::Gaussian { sigma: 2.0 }.moment_bound(0.5).unwrap().unwrap();
        assert!((got - 2.4325604285150406).abs() < 1e-10, "{got}");
    }

    #[test]
    fn pareto_monte_carlo_sanity() {
        let spec = NoiseSpec::CenteredPareto { alpha: 2.0, sigma: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_m = 0.0;
        for _ in 0..n {
            let x = spec.sample_unchecked(&mut rng);
            sum += x;
            sum_m += x.abs().powf(1.5);
        }
        let mean = sum / n as f64;
        let moment = sum_m / n as f64;
        assert!(mean.abs() < 0.01, "empirical mean {mean}");
        assert!(moment < 4.0, "empirical 1.5-moment {moment}");
    }

    #[test]
    fn hypercube_example_d1() {
        // Δ chosen directly: θ = (Δ, 2Δ), action (1,0) has mean Δ = 1/8,
        // two-point law {4 w.p. 1/32; 0}, second moment 1/2.
        let inst = hypercube_pair_with_delta(1, 1.0, 0.125, 0).unwrap();
        assert_eq!(inst.theta(), &[0.125, 0.25]);
        assert!((inst.gamma_scale() - 0.25).abs() < 1e-15);
        let pos = inst
            .action_set()
            .iter()
            .position(|(_, a)| a == [1.0, 0.0])
            .unwrap();
        let [(v, p), _, _] = inst.atoms(pos);
        assert!((v - 4.0).abs() < 1e-12);
        assert!((p - 0.03125).abs() < 1e-15);
        assert!((inst.mean(pos) - 0.125).abs() < 1e-15);
        assert!((inst.raw_moment(pos) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hypercube_means_and_moment_ceiling() {
        let inst = hypercube_pair_instance(3, 0.5, 40_000, 5).unwrap();
        assert_eq!(inst.action_set().len(), 8);
        for pos in 0..inst.action_set().len() {
            let x = inst.action_set().action(pos);
            // exactly one active coordinate per pair
            for i in 0..3 {
                assert_eq!(x[2 * i] + x[2 * i + 1], 1.0);
            }
            let atoms = inst.atoms(pos);
            let psum: f64 = atoms.iter().map(|&(_, p)| p).sum();
            assert!((psum - 1.0).abs() < 1e-12);
            let mean_from_atoms: f64 = atoms.iter().map(|&(v, p)| v * p).sum();
            assert!((mean_from_atoms - inst.mean(pos)).abs() < 1e-12);
            assert!(inst.raw_moment(pos) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn hypercube_rejects_bad_inputs() {
        // threshold for d=2, ε=1 is 4²·... = 16·4 = 64
        assert!(hypercube_pair_instance(2, 1.0, 63, 0).is_err());
        assert!(hypercube_pair_instance(2, 1.0, 64, 0).is_ok());
        assert!(hypercube_pair_with_delta(2, 1.0, 0.2, 0).is_err()); // Δ > 1/8
        assert!(hypercube_pair_with_delta(2, 1.0, 0.1, 4).is_err()); // index ≥ 2^d
    }

    #[test]
    fn grouped_block_structure() {
        let inst = grouped_finite_instance(8, 0.5, 16, 2_000_000, 3).unwrap();
        // m = 4 (4/log₂4 = 2 ≥ 8/log₂16 = 2), two blocks, 16 actions.
        let set = inst.action_set();
        assert_eq!(set.len(), 16);
        assert!((set.len() as f64).log2() <= 16f64.log2() + 1e-12);
        for pos in 0..set.len() {
            let x = set.action(pos);
            for b in 0..2 {
                let ones: f64 = x[b * 4..(b + 1) * 4].iter().sum();
                assert_eq!(ones, 1.0, "one active coordinate per block");
            }
            let mean_from_atoms: f64 = inst.atoms(pos).iter().map(|&(v, p)| v * p).sum();
            assert!((mean_from_atoms - inst.mean(pos)).abs() < 1e-12);
            assert!(inst.raw_moment(pos) <= 1.0 + 1e-9);
        }
        // Best action mean reaches γ: both blocks hit their 2Δ coordinate.
        let best = (0..set.len()).map(|p| inst.mean(p)).fold(f64::NEG_INFINITY, f64::max);
        assert!((best - inst.gamma_scale()).abs() < 1e-12);
    }

    #[test]
    fn grouped_rejects_bad_inputs() {
        assert!(grouped_finite_instance(2, 0.5, 4, 1_000_000, 0).is_err()); // no m ≥ 4
        assert!(grouped_finite_instance(8, 0.5, 7, 2_000_000, 0).is_err()); // n < d
        assert!(grouped_finite_instance(8, 0.5, 16, 100, 0).is_err()); // T too small
        assert!(grouped_finite_instance(8, 0.5, 16, 2_000_000, 16).is_err()); // index range
    }

    #[test]
    fn unit_ball_law() {
        let signs = [1.0, -1.0, 1.0, 1.0];
        let inst = unit_ball_instance(4, 0.5, 10_000, &signs, 6, 99).unwrap();
        let set = inst.action_set();
        assert_eq!(set.len(), 1 + 8 + 6);
        for pos in 0..set.len() {
            let atoms = inst.atoms(pos);
            let psum: f64 = atoms.iter().map(|&(_, p)| p).sum();
            assert!((psum - 1.0).abs() < 1e-12);
            let mean_from_atoms: f64 = atoms.iter().map(|&(v, p)| v * p).sum();
            assert!((mean_from_atoms - inst.mean(pos)).abs() < 1e-12);
            assert!((norm2(set.action(pos)) - 1.0).abs() < 1e-9);
        }
        // Best arm is the normalized θ at position 0.
        let best = (0..set.len()).map(|p| inst.mean(p)).fold(f64::NEG_INFINITY, f64::max);
        assert!((best - inst.mean(0)).abs() < 1e-15);
        assert!(inst.central_moment(0) < 1.0);
    }

    #[test]
    fn unit_ball_rejects_bad_inputs() {
        assert!(unit_ball_instance(4, 0.5, 15, &[1.0; 4], 0, 0).is_err()); // T < d²
        assert!(unit_ball_instance(4, 0.5, 100, &[1.0; 3], 0, 0).is_err()); // signs length
        assert!(unit_ball_instance(4, 0.5, 100, &[1.0, 1.0, 0.5, 1.0], 0, 0).is_err());
    }

    #[test]
    fn action_set_factories() {
        let s = make_action_set(&ActionSetKind::SimplexBasis, 3, 0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.action(1), &[0.0, 1.0, 0.0]);

        let sb = make_action_set(&ActionSetKind::SignedBasis, 2, 0).unwrap();
        assert_eq!(sb.len(), 4);
        assert_eq!(sb.action(0), &[1.0, 0.0]);
        assert_eq!(sb.action(1), &[-1.0, 0.0]);
        assert_eq!(sb.action(2), &[0.0, 1.0]);
        assert_eq!(sb.action(3), &[0.0, -1.0]);

        let grid = make_action_set(
            &ActionSetKind::LpBallGrid { p: 2.0, r: 1.0, points_per_axis: 3 },
            2,
            0,
        )
        .unwrap();
        // {−1,0,1}² filtered to the disc: the four axis points and the origin.
        assert_eq!(grid.len(), 5);

        let sph = make_action_set(&ActionSetKind::SphereRandom { count: 5 }, 2, 17).unwrap();
        let sph2 = make_action_set(&ActionSetKind::SphereRandom { count: 5 }, 2, 17).unwrap();
        for i in 0..5 {
            assert!((norm2(sph.action(i)) - 1.0).abs() < 1e-12);
            assert_eq!(sph.action(i), sph2.action(i), "seeded build must reproduce");
        }

        let cube = make_action_set(&ActionSetKind::HypercubeRandom { count: 8 }, 3, 5).unwrap();
        for i in 0..8 {
            assert!(cube.action(i).iter().all(|&v| (0.0..1.0).contains(&v)));
        }

        let ex = make_action_set(
            &ActionSetKind::Explicit(vec![vec![3.0, 4.0], vec![0.1, 0.0]]),
            2,
            0,
        )
        .unwrap();
        assert!((ex.radius() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn linear_instance_env_round_trip() {
        let arms = make_action_set(&ActionSetKind::SignedBasis, 2, 0).unwrap();
        let inst =
            LinearInstance::new(vec![0.6, -0.2], arms, NoiseSpec::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(inst.sample_reward(0, &mut rng), 0.6);
        assert_eq!(inst.sample_reward(1, &mut rng), -0.6);
        assert_eq!(inst.mean_reward(3), 0.2);
    }
}
