//! Experiment configuration: defaults, the published preset, INI files, and
//! command-line overrides, in that order of precedence (later wins).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Which bandit algorithm a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Phased elimination with moment-aware designs.
    Medpe,
    /// Truncated ridge-UCB baseline.
    CrtmStyleUcb,
}

impl Algorithm {
    /// Stable name used in filenames, CSV columns, and the manifest.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Medpe => "medpe",
            Algorithm::CrtmStyleUcb => "crtm-style-ucb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "medpe" => Ok(Algorithm::Medpe),
            "crtm-style-ucb" | "crtm" => Ok(Algorithm::CrtmStyleUcb),
            other => Err(HarnessError::config(format!(
                "unknown algorithm {other:?}; expected \"medpe\" or \"crtm-style-ucb\""
            ))),
        }
    }
}

/// Reward environment to instantiate at each dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvironmentSpec {
    /// Signed coordinate directions (2d arms), θ* = 1/√d·(1,…,1), additive
    /// centered-Pareto noise.
    SignedBasisPareto { alpha: f64, sigma: f64 },
    /// Paired-coordinate two-point-reward instance with the gap calibrated
    /// to the horizon.
    HypercubePair,
    /// Block-structured two-point-reward instance with at most `n_actions`
    /// arms.
    GroupedFinite { n_actions: usize },
    /// Discretized unit ball with shifted-atom rewards.
    UnitBall { n_sphere: usize },
    /// Degenerate sanity environment: one arm, zero noise, regret
    /// identically zero. Useful for smoke-testing the runner itself.
    SingleArmNoiseless,
}

impl EnvironmentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvironmentSpec::SignedBasisPareto { .. } => "signed-basis-pareto",
            EnvironmentSpec::HypercubePair => "hypercube-pair",
            EnvironmentSpec::GroupedFinite { .. } => "grouped-finite",
            EnvironmentSpec::UnitBall { .. } => "unit-ball",
            EnvironmentSpec::SingleArmNoiseless => "single-arm-noiseless",
        }
    }
}

/// Tuning knobs for the phased-elimination algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedpeKnobs {
    /// Multiplier on the theoretical phase budgets. The closed-form budgets
    /// carry worst-case constants; finite-horizon runs scale them down.
    pub budget_scale: f64,
    /// Optional cap on design-solver iterations (None picks a
    /// dimension-based default).
    pub design_iters: Option<usize>,
}

/// Tuning knobs for the truncated-UCB baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrtmKnobs {
    pub width: f64,
    pub trunc_scale: f64,
    pub regularizer: f64,
}

/// Everything a batch experiment needs: the grid of runs, the environment,
/// moment parameters, output location, and per-algorithm tuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub environment: EnvironmentSpec,
    pub d_values: Vec<usize>,
    pub t_horizon: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    pub epsilon: f64,
    pub upsilon: f64,
    pub outdir: PathBuf,
    /// Regret is recorded every `checkpoint_stride` rounds; must divide the
    /// horizon (or be 1).
    pub checkpoint_stride: usize,
    /// Worker-thread cap for the parallel runner; None uses all cores.
    pub jobs: Option<usize>,
    pub medpe: MedpeKnobs,
    pub crtm: CrtmKnobs,
}

/// (1+ε)-th absolute moment of Pareto(2, 1) noise after centering, for
/// ε = 1/2. Frozen from the closed form ∫|x − 2|^{3/2}·2x^{-3} dx on [1, ∞).
pub const PARETO_2_1_CENTERED_MOMENT: f64 = 2.100918962019733;

impl ExperimentConfig {
    /// Small smoke-test defaults; the base that files and flags override.
    pub fn default_base() -> Self {
        ExperimentConfig {
            algorithms: vec![Algorithm::Medpe, Algorithm::CrtmStyleUcb],
            environment: EnvironmentSpec::SignedBasisPareto { alpha: 2.0, sigma: 1.0 },
            d_values: vec![5],
            t_horizon: 10_000,
            repetitions: 3,
            master_seed: 0x0517_ED05,
            epsilon: 0.5,
            upsilon: PARETO_2_1_CENTERED_MOMENT,
            outdir: default_outdir(),
            checkpoint_stride: 100,
            jobs: None,
            medpe: MedpeKnobs { budget_scale: 2e-9, design_iters: None },
            crtm: CrtmKnobs { width: 1.0, trunc_scale: 1.0, regularizer: 1.0 },
        }
    }

    /// The benchmark grid used throughout the docs: d ∈ {10, 20, 40},
    /// T = 10⁵, ten repetitions, signed-basis arms with centered-Pareto(2,1)
    /// noise, ε = 1/2, and the matching frozen moment bound.
    pub fn benchmark_preset() -> Self {
        ExperimentConfig {
            algorithms: vec![Algorithm::Medpe, Algorithm::CrtmStyleUcb],
            environment: EnvironmentSpec::SignedBasisPareto { alpha: 2.0, sigma: 1.0 },
            d_values: vec![10, 20, 40],
            t_horizon: 100_000,
            repetitions: 10,
            master_seed: 0x0517_ED05,
            epsilon: 0.5,
            upsilon: PARETO_2_1_CENTERED_MOMENT,
            outdir: default_outdir(),
            checkpoint_stride: 1_000,
            jobs: None,
            medpe: MedpeKnobs { budget_scale: 2e-9, design_iters: None },
            crtm: CrtmKnobs { width: 1.0, trunc_scale: 1.0, regularizer: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(HarnessError::config("at least one algorithm is required"));
        }
        let mut seen = BTreeSet::new();
        for a in &self.algorithms {
            if !seen.insert(a.name()) {
                return Err(HarnessError::config(format!(
                    "algorithm {} listed twice",
                    a.name()
                )));
            }
        }
        if self.d_values.is_empty() {
            return Err(HarnessError::config("at least one dimension is required"));
        }
        if self.d_values.contains(&0) {
            return Err(HarnessError::config("dimensions must be positive"));
        }
        if self.t_horizon == 0 {
            return Err(HarnessError::config("horizon must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::config("repetitions must be at least 1"));
        }
        if self.checkpoint_stride == 0 {
            return Err(HarnessError::config("checkpoint stride must be positive"));
        }
        if self.checkpoint_stride != 1 && !self.t_horizon.is_multiple_of(self.checkpoint_stride) {
            return Err(HarnessError::config(format!(
                "checkpoint stride {} does not divide the horizon {}",
                self.checkpoint_stride, self.t_horizon
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(HarnessError::config(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.upsilon >= 0.0 && self.upsilon.is_finite()) {
            return Err(HarnessError::config(format!(
                "upsilon must be finite and non-negative, got {}",
                self.upsilon
            )));
        }
        if let Some(0) = self.jobs {
            return Err(HarnessError::config("jobs must be positive when given"));
        }
        if !(self.medpe.budget_scale > 0.0 && self.medpe.budget_scale.is_finite()) {
            return Err(HarnessError::config("medpe budget_scale must be positive"));
        }
        if !(self.crtm.width >= 0.0 && self.crtm.width.is_finite()) {
            return Err(HarnessError::config("crtm width must be non-negative"));
        }
        if !(self.crtm.trunc_scale > 0.0) {
            return Err(HarnessError::config("crtm trunc_scale must be positive"));
        }
        if !(self.crtm.regularizer > 0.0 && self.crtm.regularizer.is_finite()) {
            return Err(HarnessError::config("crtm regularizer must be positive"));
        }
        match &self.environment {
            EnvironmentSpec::SignedBasisPareto { alpha, sigma } => {
                if !(*alpha > 1.0 && alpha.is_finite()) {
                    return Err(HarnessError::config("pareto alpha must exceed 1"));
                }
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(HarnessError::config("pareto sigma must be positive"));
                }
            }
            EnvironmentSpec::GroupedFinite { n_actions } => {
                if *n_actions < 2 {
                    return Err(HarnessError::config("grouped-finite needs n_actions ≥ 2"));
                }
            }
            EnvironmentSpec::UnitBall { .. }
            | EnvironmentSpec::HypercubePair
            | EnvironmentSpec::SingleArmNoiseless => {}
        }
        Ok(())
    }

    /// Loads an INI file on top of `self`. Unknown sections or keys are
    /// rejected so typos fail loudly instead of silently keeping defaults.
    pub fn apply_ini(&mut self, path: &Path) -> Result<()> {
        let ini = ini::Ini::load_from_file(path).map_err(|e| {
            HarnessError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (section, props) in ini.iter() {
            let section_name = match section {
                Some(s) => s,
                None => {
                    if props.iter().next().is_none() {
                        continue;
                    }
                    return Err(HarnessError::config(
                        "top-level keys are not allowed; use [experiment], \
                         [environment], [medpe], or [crtm] sections",
                    ));
                }
            };
            match section_name {
                "experiment" => self.apply_experiment_section(props)?,
                "environment" => self.apply_environment_section(props)?,
                "medpe" => self.apply_medpe_section(props)?,
                "crtm" => self.apply_crtm_section(props)?,
                other => {
                    return Err(HarnessError::config(format!(
                        "unknown config section [{other}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn apply_experiment_section(&mut self, props: &ini::Properties) -> Result<()> {
        for (key, value) in props.iter() {
            match key {
                "algorithms" => {
                    self.algorithms = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(Algorithm::parse)
                        .collect::<Result<Vec<_>>>()?;
                }
                "d" => self.d_values = parse_usize_list(value, "d")?,
                "T" | "t" => self.t_horizon = parse_scalar(value, "T")?,
                "repetitions" => self.repetitions = parse_scalar(value, "repetitions")?,
                "master_seed" => self.master_seed = parse_scalar(value, "master_seed")?,
                "epsilon" => self.epsilon = parse_scalar(value, "epsilon")?,
                "upsilon" => self.upsilon = parse_scalar(value, "upsilon")?,
                "out" => self.outdir = PathBuf::from(value),
                "checkpoint_stride" => {
                    self.checkpoint_stride = parse_scalar(value, "checkpoint_stride")?;
                }
                "jobs" => self.jobs = Some(parse_scalar(value, "jobs")?),
                other => {
                    return Err(HarnessError::config(format!(
                        "unknown key {other:?} in [experiment]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn apply_environment_section(&mut self, props: &ini::Properties) -> Result<()> {
        let kind = props.get("kind").unwrap_or_else(|| self.environment.name());
        let mut env = match kind {
            "signed-basis-pareto" => {
                EnvironmentSpec::SignedBasisPareto { alpha: 2.0, sigma: 1.0 }
            }
            "hypercube-pair" => EnvironmentSpec::HypercubePair,
            "grouped-finite" => EnvironmentSpec::GroupedFinite { n_actions: 64 },
            "unit-ball" => EnvironmentSpec::UnitBall { n_sphere: 32 },
            "single-arm-noiseless" => EnvironmentSpec::SingleArmNoiseless,
            other => {
                return Err(HarnessError::config(format!(
                    "unknown environment kind {other:?}"
                )));
            }
        };
        for (key, value) in props.iter() {
            match (key, &mut env) {
                ("kind", _) => {}
                ("alpha", EnvironmentSpec::SignedBasisPareto { alpha, .. }) => {
                    *alpha = parse_scalar(value, "alpha")?;
                }
                ("sigma", EnvironmentSpec::SignedBasisPareto { sigma, .. }) => {
                    *sigma = parse_scalar(value, "sigma")?;
                }
                ("n_actions", EnvironmentSpec::GroupedFinite { n_actions }) => {
                    *n_actions = parse_scalar(value, "n_actions")?;
                }
                ("n_sphere", EnvironmentSpec::UnitBall { n_sphere }) => {
                    *n_sphere = parse_scalar(value, "n_sphere")?;
                }
                (other, _) => {
                    return Err(HarnessError::config(format!(
                        "key {other:?} does not apply to environment kind {kind:?}"
                    )));
                }
            }
        }
        self.environment = env;
        Ok(())
    }

    fn apply_medpe_section(&mut self, props: &ini::Properties) -> Result<()> {
        for (key, value) in props.iter() {
            match key {
                "budget_scale" => {
                    self.medpe.budget_scale = parse_scalar(value, "budget_scale")?;
                }
                "design_iters" => {
                    self.medpe.design_iters = Some(parse_scalar(value, "design_iters")?);
                }
                other => {
                    return Err(HarnessError::config(format!(
                        "unknown key {other:?} in [medpe]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn apply_crtm_section(&mut self, props: &ini::Properties) -> Result<()> {
        for (key, value) in props.iter() {
            match key {
                "width" => self.crtm.width = parse_scalar(value, "width")?,
                "trunc_scale" => self.crtm.trunc_scale = parse_scalar(value, "trunc_scale")?,
                "regularizer" => self.crtm.regularizer = parse_scalar(value, "regularizer")?,
                other => {
                    return Err(HarnessError::config(format!(
                        "unknown key {other:?} in [crtm]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Output directory from `HTB_OUT`, falling back to `./htb-out`.
pub fn default_outdir() -> PathBuf {
    std::env::var_os("HTB_OUT").map_or_else(|| PathBuf::from("htb-out"), PathBuf::from)
}

/// Parses one scalar config value with a helpful error.
pub fn parse_scalar<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        HarnessError::config(format!("cannot parse {key} from {value:?}"))
    })
}

/// Parses a comma-separated list of positive integers.
pub fn parse_usize_list(value: &str, key: &str) -> Result<Vec<usize>> {
    let items: Vec<usize> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(s, key))
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        return Err(HarnessError::config(format!("{key} list is empty")));
    }
    Ok(items)
}
