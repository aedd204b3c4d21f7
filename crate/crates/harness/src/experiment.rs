//! Batch experiment runner: seed derivation, environment construction,
//! parallel execution, per-run CSV emission, and regret aggregation.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use htb_core::baseline::{run_truncated_ucb, UcbConfig};
use htb_core::environments::{
    grouped_finite_instance, hypercube_pair_instance, make_action_set, unit_ball_instance,
    ActionSetKind, BernoulliRewardInstance, NoiseSpec,
};
use htb_core::medpe::{run_medpe, MedPeConfig};
use htb_core::record::RunRecord;
use htb_core::{ActionSet, LinearInstance, MomentParams};

use crate::config::{Algorithm, EnvironmentSpec, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunKey {
    pub algorithm: Algorithm,
    pub d: usize,
    pub rep: usize,
    pub seed: u64,
}

/// Mean/deviation of cumulative regret at one checkpoint, over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub d: usize,
    pub t: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub n_runs: usize,
}

/// Aggregated regret curves, sorted by (algorithm, d, t).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub rows: Vec<AggregateRow>,
}

impl AggregateResult {
    /// Rows for one (algorithm, d) curve, in checkpoint order.
    pub fn curve(&self, algorithm: &str, d: usize) -> Vec<&AggregateRow> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.d == d)
            .collect()
    }

    /// Mean cumulative regret at the largest recorded t for one curve.
    pub fn final_mean(&self, algorithm: &str, d: usize) -> Option<f64> {
        self.curve(algorithm, d).last().map(|r| r.mean_regret)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed from the master seed and the run's coordinates. Sequential
/// splitmix64 absorption keeps distinct (algorithm, d, rep) triples on
/// distinct streams while staying reproducible across platforms.
pub fn derive_seed(master_seed: u64, algorithm: &str, d: usize, rep: usize) -> u64 {
    let mut h = splitmix64(master_seed);
    for b in algorithm.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h = splitmix64(h ^ 0xD1); // separate the name from the coordinates
    h = splitmix64(h ^ d as u64);
    h = splitmix64(h ^ rep as u64);
    h
}

/// The checkpoint grid `stride, 2·stride, …, T`.
pub fn checkpoints(t_horizon: usize, stride: usize) -> Vec<usize> {
    (1..=t_horizon / stride).map(|k| k * stride).collect()
}

/// A constructed reward environment, ready to hand to either algorithm.
pub enum BuiltEnv {
    Linear(LinearInstance),
    TwoPoint(BernoulliRewardInstance),
}

/// Instantiates the configured environment at dimension `d`.
pub fn build_environment(cfg: &ExperimentConfig, d: usize) -> Result<BuiltEnv> {
    match &cfg.environment {
        EnvironmentSpec::SignedBasisPareto { alpha, sigma } => {
            let arms = make_action_set(&ActionSetKind::SignedBasis, d, 0)?;
            let scale = 1.0 / (d as f64).sqrt();
            let theta = vec![scale; d];
            let noise = NoiseSpec::CenteredPareto { alpha: *alpha, sigma: *sigma };
            Ok(BuiltEnv::Linear(LinearInstance::new(theta, arms, noise)?))
        }
        EnvironmentSpec::HypercubePair => Ok(BuiltEnv::TwoPoint(hypercube_pair_instance(
            d,
            cfg.epsilon,
            cfg.t_horizon,
            0,
        )?)),
        EnvironmentSpec::GroupedFinite { n_actions } => Ok(BuiltEnv::TwoPoint(
            grouped_finite_instance(d, cfg.epsilon, *n_actions, cfg.t_horizon, 0)?,
        )),
        EnvironmentSpec::UnitBall { n_sphere } => {
            let signs = vec![1.0; d];
            Ok(BuiltEnv::TwoPoint(unit_ball_instance(
                d,
                cfg.epsilon,
                cfg.t_horizon,
                &signs,
                *n_sphere,
                splitmix64(cfg.master_seed ^ d as u64),
            )?))
        }
        EnvironmentSpec::SingleArmNoiseless => {
            let mut arm = vec![0.0; d];
            arm[0] = 1.0;
            let arms = ActionSet::new(d, vec![arm.clone()])?;
            Ok(BuiltEnv::Linear(LinearInstance::new(arm, arms, NoiseSpec::Zero)?))
        }
    }
}

impl BuiltEnv {
    /// Runs one algorithm on this environment with the given seed.
    pub fn run(&self, cfg: &ExperimentConfig, algorithm: Algorithm, seed: u64) -> Result<RunRecord> {
        let moment = MomentParams::new(cfg.epsilon, cfg.upsilon, 1.0)?;
        match algorithm {
            Algorithm::Medpe => {
                let mut mc = MedPeConfig::new(moment, cfg.t_horizon)?;
                mc.budget_scale = cfg.medpe.budget_scale;
                mc.design_iters = cfg.medpe.design_iters;
                let record = match self {
                    BuiltEnv::Linear(env) => run_medpe(env, &mc, seed)?,
                    BuiltEnv::TwoPoint(env) => run_medpe(env, &mc, seed)?,
                };
                Ok(record)
            }
            Algorithm::CrtmStyleUcb => {
                let mut uc = UcbConfig::new(moment, cfg.crtm.regularizer)?;
                uc.width = cfg.crtm.width;
                uc.trunc_scale = cfg.crtm.trunc_scale;
                let record = match self {
                    BuiltEnv::Linear(env) => run_truncated_ucb(env, &uc, cfg.t_horizon, seed)?,
                    BuiltEnv::TwoPoint(env) => run_truncated_ucb(env, &uc, cfg.t_horizon, seed)?,
                };
                Ok(record)
            }
        }
    }
}

/// Full list of runs for a config, in deterministic (algorithm, d, rep) order.
pub fn run_keys(cfg: &ExperimentConfig) -> Vec<RunKey> {
    let mut keys = Vec::new();
    for &algorithm in &cfg.algorithms {
        for &d in &cfg.d_values {
            for rep in 0..cfg.repetitions {
                let seed = derive_seed(cfg.master_seed, algorithm.name(), d, rep);
                keys.push(RunKey { algorithm, d, rep, seed });
            }
        }
    }
    keys
}

#[derive(Serialize)]
struct ManifestNotes {
    noise: &'static str,
    medpe: String,
    crtm: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    library_version: &'static str,
    config: &'a ExperimentConfig,
    runs: &'a [RunKey],
    notes: ManifestNotes,
}

fn manifest_json(cfg: &ExperimentConfig, runs: &[RunKey]) -> String {
    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        runs,
        notes: ManifestNotes {
            noise: "Pareto(2, 1) rewards are centered by subtracting their mean 2, so \
                    the noise is zero-mean; its (1+\u{3b5})-th absolute moment at \
                    \u{3b5} = 0.5 is 2.100918962019733 (the default upsilon).",
            medpe: format!(
                "phase budgets are the closed-form schedule scaled by budget_scale = {}; \
                 design_iters = {:?}",
                cfg.medpe.budget_scale, cfg.medpe.design_iters
            ),
            crtm: format!(
                "baseline hyperparameters: confidence width multiplier {}, truncation \
                 scale {}, ridge regularizer {}",
                cfg.crtm.width, cfg.crtm.trunc_scale, cfg.crtm.regularizer
            ),
        },
    };
    // Struct serialization cannot fail and field order is fixed, so the
    // manifest is byte-stable across reruns.
    serde_json::to_string_pretty(&manifest).expect("manifest serialization")
}

/// `run_{algorithm}_{d}_{rep}.csv` inside the output directory.
pub fn run_csv_path(outdir: &Path, key: &RunKey) -> PathBuf {
    outdir.join(format!("run_{}_{}_{}.csv", key.algorithm.name(), key.d, key.rep))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Renders one run's trajectory rows at the checkpoint grid.
pub fn run_csv_text(record: &RunRecord, marks: &[usize]) -> String {
    let regrets = record.regret_at_checkpoints(marks);
    let mut out = String::from("t,phase,action_label,reward,cum_regret\n");
    for (&t, &reg) in marks.iter().zip(regrets.iter()) {
        let row = &record.rounds()[t - 1];
        out.push_str(&format!(
            "{t},{},{},{},{}\n",
            row.phase, row.action_label, row.reward, reg
        ));
    }
    out
}

/// Renders aggregate rows as CSV (also the on-disk `aggregate.csv` format).
pub fn aggregate_csv_text(agg: &AggregateResult) -> String {
    let mut out = String::from("algorithm,d,t,mean_regret,std_regret,n_runs\n");
    for r in &agg.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.algorithm, r.d, r.t, r.mean_regret, r.std_regret, r.n_runs
        ));
    }
    out
}

/// Mean and sample standard deviation (0 for a single observation).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt().max(0.0))
}

/// Regret curves for one (algorithm name, dimension) group: one inner
/// vector per repetition, aligned with the checkpoint marks.
pub type CurveGroup = ((String, usize), Vec<Vec<f64>>);

/// Collapses per-repetition regret curves into mean/std rows. `curves` maps
/// each (algorithm, d) to its repetitions' regret values per checkpoint.
pub fn aggregate_curves(curves: &[CurveGroup], marks: &[usize]) -> AggregateResult {
    let mut rows = Vec::new();
    let mut sorted: Vec<_> = curves.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for ((algorithm, d), reps) in sorted {
        for (i, &t) in marks.iter().enumerate() {
            let at_t: Vec<f64> = reps.iter().map(|curve| curve[i]).collect();
            let (mean_regret, std_regret) = mean_std(&at_t);
            rows.push(AggregateRow {
                algorithm: algorithm.clone(),
                d: *d,
                t,
                mean_regret,
                std_regret,
                n_runs: reps.len(),
            });
        }
    }
    AggregateResult { rows }
}

/// Runs the whole grid: checks the output directory is writable, writes the
/// manifest, executes every (algorithm, d, rep) cell in parallel, stores one
/// CSV per run, and writes the aggregate table. Returns the aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.outdir).map_err(|e| HarnessError::io(&cfg.outdir, e))?;
    let keys = run_keys(cfg);
    // Writing the manifest up front both records the resolved plan and
    // surfaces an unwritable output directory before any simulation starts.
    write_text(&cfg.outdir.join("manifest.json"), &manifest_json(cfg, &keys))?;

    // Environments depend only on (config, d); build each dimension once.
    let mut envs: Vec<(usize, BuiltEnv)> = Vec::new();
    for &d in &cfg.d_values {
        envs.push((d, build_environment(cfg, d)?));
    }
    let env_for = |d: usize| &envs.iter().find(|(dd, _)| *dd == d).expect("built").1;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::config(format!("cannot build thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        keys.par_iter()
            .map(|key| env_for(key.d).run(cfg, key.algorithm, key.seed))
            .collect::<Result<Vec<_>>>()
    })?;

    let marks = checkpoints(cfg.t_horizon, cfg.checkpoint_stride);
    for (key, record) in keys.iter().zip(records.iter()) {
        write_text(&run_csv_path(&cfg.outdir, key), &run_csv_text(record, &marks))?;
    }

    let mut curves: Vec<CurveGroup> = Vec::new();
    for (key, record) in keys.iter().zip(records.iter()) {
        let group = (key.algorithm.name().to_owned(), key.d);
        let curve = record.regret_at_checkpoints(&marks);
        match curves.iter_mut().find(|(g, _)| *g == group) {
            Some((_, reps)) => reps.push(curve),
            None => curves.push((group, vec![curve])),
        }
    }
    let agg = aggregate_curves(&curves, &marks);
    write_text(&cfg.outdir.join("aggregate.csv"), &aggregate_csv_text(&agg))?;
    Ok(agg)
}

/// Rebuilds the aggregate table from per-run CSVs in `dir` (the `aggregate`
/// subcommand). Only files named `run_{algorithm}_{d}_{rep}.csv` are read.
pub fn aggregate_from_dir(dir: &Path) -> Result<AggregateResult> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("run_") && name.ends_with(".csv") {
            names.push(name);
        }
    }
    if names.is_empty() {
        return Err(HarnessError::config(format!(
            "no run_*.csv files found in {}",
            dir.display()
        )));
    }
    names.sort();

    let mut marks: Option<Vec<usize>> = None;
    let mut curves: Vec<CurveGroup> = Vec::new();
    for name in &names {
        let stem = name.trim_start_matches("run_").trim_end_matches(".csv");
        let parts: Vec<&str> = stem.rsplitn(3, '_').collect();
        if parts.len() != 3 {
            return Err(HarnessError::config(format!(
                "run file {name:?} does not match run_{{algorithm}}_{{d}}_{{rep}}.csv"
            )));
        }
        let algorithm = parts[2].to_owned();
        let d: usize = parts[1].parse().map_err(|_| {
            HarnessError::config(format!("bad dimension in run file name {name:?}"))
        })?;
        let path = dir.join(name);
        let (ts, regrets) = read_run_csv(&path)?;
        match &marks {
            None => marks = Some(ts),
            Some(m) if *m == ts => {}
            Some(_) => {
                return Err(HarnessError::config(format!(
                    "run file {name:?} uses a different checkpoint grid than the others"
                )));
            }
        }
        let group = (algorithm, d);
        match curves.iter_mut().find(|(g, _)| *g == group) {
            Some((_, reps)) => reps.push(regrets),
            None => curves.push((group, vec![regrets])),
        }
    }
    Ok(aggregate_curves(&curves, &marks.expect("at least one run file")))
}

/// Reads the (t, cum_regret) columns back out of a per-run CSV.
pub fn read_run_csv(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut ts = Vec::new();
    let mut regrets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t,phase,action_label,reward,cum_regret" {
                return Err(HarnessError::config(format!(
                    "{}: unexpected header {line:?}",
                    path.display()
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(HarnessError::config(format!(
                "{}: line {} has {} fields, expected 5",
                path.display(),
                i + 1,
                fields.len()
            )));
        }
        ts.push(fields[0].parse().map_err(|_| {
            HarnessError::config(format!("{}: bad t on line {}", path.display(), i + 1))
        })?);
        regrets.push(fields[4].parse().map_err(|_| {
            HarnessError::config(format!("{}: bad regret on line {}", path.display(), i + 1))
        })?);
    }
    Ok((ts, regrets))
}

/// Runs a single (algorithm, d) cell and writes its per-run CSV; returns the
/// record. Used by the `simulate` subcommand.
pub fn simulate_single(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    d: usize,
    rep: usize,
) -> Result<(RunKey, RunRecord)> {
    cfg.validate()?;
    let env = build_environment(cfg, d)?;
    let seed = derive_seed(cfg.master_seed, algorithm.name(), d, rep);
    let key = RunKey { algorithm, d, rep, seed };
    let record = env.run(cfg, algorithm, seed)?;
    std::fs::create_dir_all(&cfg.outdir).map_err(|e| HarnessError::io(&cfg.outdir, e))?;
    let marks = checkpoints(cfg.t_horizon, cfg.checkpoint_stride);
    write_text(&run_csv_path(&cfg.outdir, &key), &run_csv_text(&record, &marks))?;
    Ok((key, record))
}

/// Writes `text` to stdout or a file. Shared by subcommands with `--out`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}
