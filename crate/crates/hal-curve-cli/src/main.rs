//! `regimen-curve`: command-line front end for kernel-smoothed
//! counterfactual response curves under treatment rules.
//!
//! Three subcommands share one configuration surface: a TOML key-value
//! file named by `--config`, with every key overridable by a flag of the
//! same name. `estimate` evaluates one rule at one stratum point, `curve`
//! traces a grid of rules, and `simulate` replicates a benchmark scenario
//! into bias and coverage tables. Exit codes: 0 on success, 2 on a
//! configuration or input-schema violation, 3 on a pipeline failure.

mod commands;
mod config;
mod errors;
mod input;
mod output;

use clap::{Args, Parser, Subcommand};
use config::FileConfig;
use errors::CliResult;

#[derive(Parser)]
#[command(
    name = "regimen-curve",
    version,
    about = "Kernel-smoothed counterfactual response curves for treatment rules",
    long_about = "Estimates covariate-adjusted counterfactual response curves for \
threshold treatment rules: lasso-based nuisance fits with undersmoothed or \
cross-validated L1 bounds, kernel smoothing over the stratum, influence-function \
confidence intervals, and a replication harness for the benchmark scenarios.\n\n\
All values can live in a TOML config file (--config); any flag of the same name \
overrides the file. Exit codes: 0 success, 2 input/schema error, 3 pipeline error."
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the smoothed response at one stratum point under one rule.
    Estimate(CommonArgs),
    /// Trace the smoothed response over a grid of rule directions.
    Curve(CommonArgs),
    /// Replicate a benchmark scenario into bias/coverage CSV tables.
    Simulate(CommonArgs),
}

/// Flag mirror of the config-file keys (flags override the file).
#[derive(Args)]
struct CommonArgs {
    /// TOML config file holding any of the keys below.
    #[arg(long)]
    config: Option<String>,

    // --- data mapping (estimate/curve) ---
    /// Input data CSV (headered, UTF-8, numeric cells).
    #[arg(long)]
    input: Option<String>,
    /// Output CSV path (estimate/curve).
    #[arg(long)]
    output: Option<String>,
    /// Outcome column name.
    #[arg(long)]
    y_col: Option<String>,
    /// Censoring-indicator column name (1 = uncensored).
    #[arg(long)]
    delta_col: Option<String>,
    /// Treatment column name (0/1).
    #[arg(long)]
    a_col: Option<String>,
    /// Covariate column names, comma-separated.
    #[arg(long, value_delimiter = ',')]
    w_cols: Option<Vec<String>>,
    /// Rule covariate names (subset of w_cols), comma-separated.
    #[arg(long, value_delimiter = ',')]
    s_cols: Option<Vec<String>>,
    /// Stratum covariate names (subset of w_cols), comma-separated.
    #[arg(long, value_delimiter = ',')]
    v_cols: Option<Vec<String>>,

    // --- target ---
    /// Outcome threshold t for I(Y > t).
    #[arg(long)]
    t: Option<f64>,
    /// Stratum evaluation point, one value per stratum covariate.
    #[arg(long, value_delimiter = ',')]
    v0: Option<Vec<f64>>,
    /// Rule direction, one value per rule covariate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    /// curve: number of evenly spaced unit-circle directions.
    #[arg(long)]
    theta_circle: Option<usize>,
    /// curve: explicit direction angles in radians, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta_angles: Option<Vec<f64>>,

    // --- estimation ---
    /// Bandwidth: 'adaptive', one number, or a comma-separated list.
    #[arg(long)]
    h: Option<String>,
    /// L1-bound selection: 'cv', 'undersmoothed', or one fixed bound.
    #[arg(long)]
    lambda: Option<String>,
    /// Cross-fitting folds B (1 disables sample splitting).
    #[arg(long)]
    folds: Option<u32>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Two-sided miscoverage level of the intervals.
    #[arg(long)]
    alpha: Option<f64>,
    /// Kernel family: 'uniform', 'epanechnikov', or 'gaussian'.
    #[arg(long)]
    kernel: Option<String>,
    /// Kernel order J (1 or 2).
    #[arg(long)]
    kernel_order: Option<usize>,
    /// Ascending CV bound ladder for the mechanisms, comma-separated.
    #[arg(long, value_delimiter = ',')]
    mech_bounds: Option<Vec<f64>>,
    /// Ascending CV bound ladder for outcome/surface fits, comma-separated.
    #[arg(long, value_delimiter = ',')]
    surf_bounds: Option<Vec<f64>>,
    /// Geometric extension factor for undersmoothing grids.
    #[arg(long)]
    grid_factor: Option<f64>,
    /// Number of points in each undersmoothing grid.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Bandwidth-ladder multipliers on the reference rate, comma-separated.
    #[arg(long, value_delimiter = ',')]
    multipliers: Option<Vec<f64>>,
    /// Trend-adjustment multiplier for bandwidth selection.
    #[arg(long)]
    kappa: Option<f64>,
    /// Surface-weight stabilizer: 'one' or 'stabilized'.
    #[arg(long)]
    xi: Option<String>,
    /// Interval variance estimator: 'eif' or 'conservative'.
    #[arg(long)]
    variance: Option<String>,
    /// Positivity truncation level for mechanism probabilities.
    #[arg(long)]
    gamma: Option<f64>,
    /// Basis knot policy: 'plain' (quantile grid) or 'binned'.
    #[arg(long)]
    basis: Option<String>,
    /// binned basis: maximum knots per covariate.
    #[arg(long)]
    knots: Option<usize>,
    /// binned basis: polynomial degree added per knot subset.
    #[arg(long)]
    degree: Option<u8>,
    /// Largest covariate-interaction order in the basis.
    #[arg(long)]
    max_order: Option<usize>,
    /// Coordinate-descent convergence threshold.
    #[arg(long)]
    solver_tol: Option<f64>,
    /// Coordinate-descent sweep budget per fit.
    #[arg(long)]
    solver_sweeps: Option<usize>,

    // --- simulate ---
    /// Benchmark scenario: 'sc1' (randomized) or 'sc2' (confounded).
    #[arg(long)]
    scenario: Option<String>,
    /// Estimator: 'hal-undersmoothed', 'hal-cv', or 'rf-baseline'.
    #[arg(long)]
    estimator: Option<String>,
    /// Sample size per replication.
    #[arg(long)]
    n: Option<usize>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Monte Carlo draws for each ground-truth value.
    #[arg(long)]
    truth_draws: Option<usize>,
    /// Directory for bias.csv and coverage.csv.
    #[arg(long)]
    out_dir: Option<String>,
    /// Forest baseline: number of trees.
    #[arg(long)]
    trees: Option<usize>,
    /// Forest baseline: maximum tree depth.
    #[arg(long)]
    tree_depth: Option<usize>,
    /// Forest baseline: minimum samples per leaf side.
    #[arg(long)]
    min_leaf: Option<usize>,
}

/// Applies flag overrides on top of the file config.
fn merge(mut file: FileConfig, args: &CommonArgs) -> CliResult<FileConfig> {
    // The three direction keys are alternatives, so a direction flag
    // replaces the file's whole choice rather than sitting beside it.
    if args.theta.is_some() || args.theta_circle.is_some() || args.theta_angles.is_some() {
        file.theta = None;
        file.theta_circle = None;
        file.theta_angles = None;
    }
    macro_rules! take {
        ($($field:ident),* $(,)?) => {
            $(if args.$field.is_some() { file.$field = args.$field.clone(); })*
        };
    }
    take!(
        input, output, y_col, delta_col, a_col, w_cols, s_cols, v_cols, t, v0, theta,
        theta_circle, theta_angles, folds, seed, alpha, kernel, kernel_order, mech_bounds,
        surf_bounds, grid_factor, grid_points, multipliers, kappa, xi, variance, gamma, basis,
        knots, degree, max_order, solver_tol, solver_sweeps, scenario, estimator, n, reps,
        truth_draws, out_dir, trees, tree_depth, min_leaf,
    );
    if let Some(raw) = &args.h {
        file.h = Some(config::parse_h_flag(raw)?);
    }
    if let Some(raw) = &args.lambda {
        file.lambda = Some(config::parse_lambda_flag(raw)?);
    }
    Ok(file)
}

fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Estimate(args) => {
            let cfg = merge(config::load_file(args.config.as_deref())?, args)?;
            commands::cmd_estimate(&cfg)
        }
        Command::Curve(args) => {
            let cfg = merge(config::load_file(args.config.as_deref())?, args)?;
            commands::cmd_curve(&cfg)
        }
        Command::Simulate(args) => {
            let cfg = merge(config::load_file(args.config.as_deref())?, args)?;
            commands::cmd_simulate(&cfg)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("pipeline error: cannot configure {threads} worker threads: {e}");
            std::process::exit(3);
        }
    }
    if let Err(e) = dispatch(&cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
