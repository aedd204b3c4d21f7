//! `htb`: command-line front end for the heavy-tailed bandit simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use htb_core::design::{
    default_design_iters, g_optimal_design, minimize_moment_objective, moment_objective,
    DesignProblem, DEFAULT_DESIGN_TOL,
};
use htb_core::environments::{make_action_set, ActionSetKind, NoiseSpec};
use htb_core::kernel::{matern_design_bound, run_kernel_medpe, KernelExpansion, KernelSpec};
use htb_core::medpe::MedPeConfig;
use htb_core::MomentParams;

use htb_harness::config::{parse_scalar, parse_usize_list, Algorithm, ExperimentConfig};
use htb_harness::discretize::{discretize_action_set, ContinuousDomain};
use htb_harness::error::{HarnessError, Result};
use htb_harness::experiment::{
    aggregate_from_dir, checkpoints, emit, run_experiment, simulate_single,
};
use htb_harness::exponents::theory_exponents;
use htb_harness::plotdata::{emit_plot_data, PlotFormat};

#[derive(Parser)]
#[command(
    name = "htb",
    about = "Phased-elimination and UCB simulators for linear bandits with heavy-tailed rewards",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags shared by the run-producing subcommands. Precedence: built-in
/// defaults (or `--preset`), then `--config`, then explicit flags.
#[derive(Args)]
struct ConfigArgs {
    /// INI config file with [experiment]/[environment]/[medpe]/[crtm] sections
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named preset: "benchmark" (d ∈ {10,20,40}, T = 10⁵, 10 reps)
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Dimensions to sweep, comma-separated (e.g. "10,20,40")
    #[arg(long, value_name = "LIST")]
    d: Option<String>,
    /// Horizon (rounds per run)
    #[arg(long = "T", visible_alias = "horizon", value_name = "N")]
    t: Option<usize>,
    /// Repetitions per (algorithm, d) cell
    #[arg(long, value_name = "N")]
    reps: Option<usize>,
    /// Master seed; per-run seeds are derived from it
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Tail exponent ε ∈ (0, 1]
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Central (1+ε)-moment bound υ of the reward noise
    #[arg(long, value_name = "UPS")]
    upsilon: Option<f64>,
    /// Algorithms to run, comma-separated ("medpe,crtm-style-ucb")
    #[arg(long, value_name = "LIST")]
    algo: Option<String>,
    /// Output directory (default: $HTB_OUT or ./htb-out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Record regret every N rounds (must divide T)
    #[arg(long, value_name = "N")]
    checkpoint_stride: Option<usize>,
    /// Scale on the closed-form elimination phase budgets
    #[arg(long, value_name = "X")]
    budget_scale: Option<f64>,
    /// Confidence-width multiplier of the UCB baseline
    #[arg(long, value_name = "X")]
    crtm_width: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match self.preset.as_deref() {
            None => ExperimentConfig::default_base(),
            Some("benchmark") => ExperimentConfig::benchmark_preset(),
            Some(other) => {
                return Err(HarnessError::config(format!(
                    "unknown preset {other:?}; available: benchmark"
                )));
            }
        };
        if let Some(path) = &self.config {
            cfg.apply_ini(path)?;
        }
        if let Some(list) = &self.d {
            cfg.d_values = parse_usize_list(list, "--d")?;
        }
        if let Some(t) = self.t {
            cfg.t_horizon = t;
        }
        if let Some(reps) = self.reps {
            cfg.repetitions = reps;
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(epsilon) = self.epsilon {
            cfg.epsilon = epsilon;
        }
        if let Some(upsilon) = self.upsilon {
            cfg.upsilon = upsilon;
        }
        if let Some(list) = &self.algo {
            cfg.algorithms = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(Algorithm::parse)
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(out) = &self.out {
            cfg.outdir = out.clone();
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = Some(jobs);
        }
        if let Some(stride) = self.checkpoint_stride {
            cfg.checkpoint_stride = stride;
        }
        if let Some(scale) = self.budget_scale {
            cfg.medpe.budget_scale = scale;
        }
        if let Some(width) = self.crtm_width {
            cfg.crtm.width = width;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the two-stage experimental design on a synthetic arm set and
    /// report the moment objective with its certificate bound
    Design {
        /// Ambient dimension
        #[arg(long, value_name = "N")]
        d: usize,
        /// Arm-set shape: simplex | signed | sphere:N | cube:N | interval | circle
        #[arg(long, default_value = "signed", value_name = "KIND")]
        kind: String,
        #[arg(long, default_value_t = 0.5, value_name = "EPS")]
        epsilon: f64,
        /// Horizon used to pick the default regularizer
        #[arg(long = "T", default_value_t = 100_000, value_name = "N")]
        t: usize,
        /// Gram regularizer (default: T^(-2eps/(1+eps)))
        #[arg(long, value_name = "X")]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1.0, value_name = "X")]
        beta: f64,
        /// Seed for randomized arm sets
        #[arg(long, default_value_t = 0, value_name = "SEED")]
        arm_seed: u64,
        /// Solver iteration cap (default scales with d)
        #[arg(long, value_name = "N")]
        iters: Option<usize>,
        /// Write the JSON report here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run a single (algorithm, dimension) cell and write its trajectory CSV
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,
        /// Which repetition index to run (seeds differ per rep)
        #[arg(long, default_value_t = 0, value_name = "N")]
        rep: usize,
    },
    /// Run the full experiment grid and write runs + aggregate + manifest
    Experiment {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Rebuild aggregate curves from per-run CSVs in a directory
    Aggregate {
        /// Directory containing run_*.csv files
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
        /// Output format: csv | json
        #[arg(long, default_value = "csv", value_name = "FMT")]
        format: String,
        /// Write here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Print closed-form regret-rate exponents for plotting
    Exponents {
        #[arg(long, default_value_t = 0.5, value_name = "EPS")]
        epsilon: f64,
        #[arg(long, default_value_t = 10, value_name = "N")]
        d: usize,
        /// Matérn smoothness; adds the kernel rows
        #[arg(long, value_name = "NU")]
        nu: Option<f64>,
        /// Arm count; adds the finite-arm rows
        #[arg(long, value_name = "N")]
        n: Option<usize>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run phased elimination on a discretized kernel bandit
    KernelSim {
        /// Kernel: matern | rbf | linear
        #[arg(long, default_value = "matern", value_name = "KIND")]
        kernel: String,
        #[arg(long, default_value_t = 2.5, value_name = "NU")]
        nu: f64,
        #[arg(long, default_value_t = 0.2, value_name = "L")]
        lengthscale: f64,
        /// Domain: interval | circle | cube:N
        #[arg(long, default_value = "interval", value_name = "DOMAIN")]
        domain: String,
        /// Grid points per axis
        #[arg(long, default_value_t = 64, value_name = "N")]
        resolution: usize,
        /// Expansion anchors, semicolon-separated points of comma-separated
        /// coordinates (e.g. "0.3;0.8")
        #[arg(long, default_value = "0.3;0.8", value_name = "PTS")]
        anchors: String,
        /// Expansion coefficients, comma-separated
        #[arg(long, default_value = "0.95,-0.6", value_name = "LIST")]
        coeffs: String,
        #[arg(long = "T", default_value_t = 100_000, value_name = "N")]
        t: usize,
        #[arg(long, default_value_t = 0, value_name = "SEED")]
        seed: u64,
        #[arg(long, default_value_t = 0.5, value_name = "EPS")]
        epsilon: f64,
        /// Noise moment bound (default: centered Pareto(2,1) at ε = 1/2)
        #[arg(long, value_name = "UPS")]
        upsilon: Option<f64>,
        #[arg(long, default_value_t = 2e-8, value_name = "X")]
        budget_scale: f64,
        #[arg(long, value_name = "N")]
        design_iters: Option<usize>,
        #[arg(long, default_value_t = 1_000, value_name = "N")]
        checkpoint_stride: usize,
        /// Write the trajectory CSV here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("htb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Design { d, kind, epsilon, t, gamma, beta, arm_seed, iters, out } => {
            cmd_design(d, &kind, epsilon, t, gamma, beta, arm_seed, iters, out.as_deref())
        }
        Cmd::Simulate { common, rep } => {
            let cfg = common.resolve()?;
            if cfg.algorithms.len() != 1 || cfg.d_values.len() != 1 {
                return Err(HarnessError::config(
                    "simulate runs one cell: pass exactly one --algo and one --d",
                ));
            }
            let (key, record) = simulate_single(&cfg, cfg.algorithms[0], cfg.d_values[0], rep)?;
            println!(
                "{} d={} rep={} seed={}: final cumulative regret {:.6} over {} rounds",
                key.algorithm.name(),
                key.d,
                key.rep,
                key.seed,
                record.final_regret(),
                record.len()
            );
            println!("wrote {}", htb_harness::experiment::run_csv_path(&cfg.outdir, &key).display());
            Ok(())
        }
        Cmd::Experiment { common } => {
            let cfg = common.resolve()?;
            let agg = run_experiment(&cfg)?;
            for &d in &cfg.d_values {
                for algo in &cfg.algorithms {
                    if let Some(last) = agg.curve(algo.name(), d).last() {
                        println!(
                            "{:>14} d={:<3} final regret {:>12.4} ± {:<12.4} (n={})",
                            last.algorithm, last.d, last.mean_regret, last.std_regret, last.n_runs
                        );
                    }
                }
            }
            println!("outputs in {}", cfg.outdir.display());
            Ok(())
        }
        Cmd::Aggregate { dir, format, out } => {
            let agg = aggregate_from_dir(&dir)?;
            let text = emit_plot_data(&agg, PlotFormat::parse(&format)?);
            emit(&text, out.as_deref())
        }
        Cmd::Exponents { epsilon, d, nu, n, out } => {
            let report = theory_exponents(epsilon, d, nu, n)?;
            let mut text = serde_json::to_string_pretty(&report)
                .expect("exponent report serialization");
            text.push('\n');
            emit(&text, out.as_deref())
        }
        Cmd::KernelSim {
            kernel,
            nu,
            lengthscale,
            domain,
            resolution,
            anchors,
            coeffs,
            t,
            seed,
            epsilon,
            upsilon,
            budget_scale,
            design_iters,
            checkpoint_stride,
            out,
        } => cmd_kernel_sim(
            &kernel,
            nu,
            lengthscale,
            &domain,
            resolution,
            &anchors,
            &coeffs,
            t,
            seed,
            epsilon,
            upsilon,
            budget_scale,
            design_iters,
            checkpoint_stride,
            out.as_deref(),
        ),
    }
}

fn parse_arm_kind(kind: &str) -> Result<ActionSetKind> {
    let lower = kind.trim().to_ascii_lowercase();
    if lower == "simplex" {
        return Ok(ActionSetKind::SimplexBasis);
    }
    if lower == "signed" {
        return Ok(ActionSetKind::SignedBasis);
    }
    for (prefix, sphere) in [("sphere", true), ("cube", false)] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            let count: usize = rest.trim_matches([':', '-', ' ']).parse().map_err(|_| {
                HarnessError::config(format!("cannot parse arm count from {kind:?}"))
            })?;
            return Ok(if sphere {
                ActionSetKind::SphereRandom { count }
            } else {
                ActionSetKind::HypercubeRandom { count }
            });
        }
    }
    Err(HarnessError::config(format!(
        "unknown arm-set kind {kind:?}; expected simplex, signed, sphere:N, or cube:N"
    )))
}

#[allow(clippy::too_many_arguments)]
fn cmd_design(
    d: usize,
    kind: &str,
    epsilon: f64,
    t: usize,
    gamma: Option<f64>,
    beta: f64,
    arm_seed: u64,
    iters: Option<usize>,
    out: Option<&std::path::Path>,
) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(HarnessError::config("epsilon must lie in (0, 1]"));
    }
    if t == 0 {
        return Err(HarnessError::config("T must be positive"));
    }
    let arms = match ContinuousDomain::parse(kind) {
        // Continuous names ("interval", "circle") go through the covering
        // path at a horizon-free default resolution.
        Ok(domain) => discretize_action_set(domain, 64)?.actions,
        Err(_) => make_action_set(&parse_arm_kind(kind)?, d, arm_seed)?,
    };
    let gamma = gamma.unwrap_or_else(|| (t as f64).powf(-2.0 * epsilon / (1.0 + epsilon)));
    let problem = DesignProblem::new(&arms, gamma, beta, epsilon)?;
    let iters = iters.unwrap_or_else(|| default_design_iters(arms.dim()));

    let warm = g_optimal_design(&arms, gamma, iters, DEFAULT_DESIGN_TOL)?;
    let warm_m = moment_objective(&problem, &warm)?;
    let refined = minimize_moment_objective(&problem, &warm, iters, DEFAULT_DESIGN_TOL)?;
    let refined = refined.drop_tiny();
    let m_value = moment_objective(&problem, &refined)?;
    // Generic guarantee: the warm start already certifies
    // M ≤ 2·d^((1+ε)/2), so the refined value must sit below it too.
    let certificate = 2.0 * (arms.dim() as f64).powf((1.0 + epsilon) / 2.0);

    let report = serde_json::json!({
        "d": arms.dim(),
        "n_arms": arms.len(),
        "epsilon": epsilon,
        "gamma": gamma,
        "beta": beta,
        "warm_start_objective": warm_m,
        "moment_objective": m_value,
        "certificate_bound": certificate,
        "within_certificate": m_value <= certificate + 1e-9,
        "support_size": refined.support().len(),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("design report");
    text.push('\n');
    emit(&text, out)
}

fn parse_points(spec: &str) -> Result<Vec<Vec<f64>>> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|c| parse_scalar::<f64>(c, "anchor coordinate"))
                .collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_kernel_sim(
    kernel: &str,
    nu: f64,
    lengthscale: f64,
    domain: &str,
    resolution: usize,
    anchors: &str,
    coeffs: &str,
    t: usize,
    seed: u64,
    epsilon: f64,
    upsilon: Option<f64>,
    budget_scale: f64,
    design_iters: Option<usize>,
    checkpoint_stride: usize,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let spec = match kernel.trim().to_ascii_lowercase().as_str() {
        "matern" => KernelSpec::Matern { nu, lengthscale },
        "rbf" => KernelSpec::Rbf { lengthscale },
        "linear" => KernelSpec::Linear,
        other => {
            return Err(HarnessError::config(format!(
                "unknown kernel {other:?}; expected matern, rbf, or linear"
            )));
        }
    };
    let domain = ContinuousDomain::parse(domain)?;
    let disc = discretize_action_set(domain, resolution)?;
    if disc.capped {
        eprintln!(
            "htb: warning: domain capped to {} points per axis",
            disc.resolution
        );
    }
    if t == 0 {
        return Err(HarnessError::config("T must be positive"));
    }
    if checkpoint_stride == 0 || (checkpoint_stride != 1 && !t.is_multiple_of(checkpoint_stride)) {
        return Err(HarnessError::config(
            "checkpoint stride must divide T (or be 1)",
        ));
    }

    let f_star = KernelExpansion::new(parse_points(anchors)?, {
        coeffs
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|c| parse_scalar::<f64>(c, "coefficient"))
            .collect::<Result<Vec<_>>>()?
    })?;
    let upsilon = upsilon.unwrap_or(htb_harness::config::PARETO_2_1_CENTERED_MOMENT);
    let noise = NoiseSpec::CenteredPareto { alpha: 2.0, sigma: 1.0 };
    let moment = MomentParams::new(epsilon, upsilon, 1.0)?;
    let mut cfg = MedPeConfig::new(moment, t)?;
    cfg.budget_scale = budget_scale;
    cfg.design_iters = design_iters;

    let record = run_kernel_medpe(&disc.actions, &f_star, &noise, &spec, &cfg, seed)?;

    if let KernelSpec::Matern { nu, .. } = spec {
        let d = disc.actions.dim();
        let bound = matern_design_bound(nu, d, epsilon, t as f64)?;
        eprintln!(
            "design-complexity growth bound: T^{:.4} (value {:.3} at T = {t})",
            bound.exponent, bound.value_at_t
        );
    }
    eprintln!(
        "final cumulative regret {:.6} over {} rounds",
        record.final_regret(),
        record.len()
    );

    let marks = checkpoints(t, checkpoint_stride);
    emit(&htb_harness::experiment::run_csv_text(&record, &marks), out)
}
