//! Configuration: one TOML key-value file, overridden by command-line
//! flags, resolved into the library's typed configuration structs.
//!
//! Every key is optional in the file; each subcommand validates that the
//! keys it needs are present after the flag merge. Unknown keys are
//! rejected so typos fail loudly, with the TOML parser's line/column
//! information in the message.

use crate::errors::{CliError, CliResult};
use hal_curve::bandwidth::default_kappa;
use hal_curve::curve::{VarianceMode, XiMode};
use hal_curve::hal::KnotPolicy;
use hal_curve::kernel::KernelFamily;
use hal_curve::nuisance::NuisanceConfig;
use hal_curve::pipeline::{BoundSelection, PipelineConfig};
use hal_curve::sim::{EstimatorKind, ForestConfig, Scenario};
use serde::Deserialize;
use std::path::Path;

/// Bandwidth request: a single value, an explicit grid, or the adaptive
/// trend rule over the multiplier ladder.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum HSpec {
    /// One fixed bandwidth.
    Fixed(f64),
    /// An explicit list of bandwidths, one output row each.
    Grid(Vec<f64>),
    /// The string "adaptive".
    Named(String),
}

/// L1-bound request: cross-validated, undersmoothed, or one fixed bound
/// applied to mechanisms and surface alike.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LambdaSpec {
    /// One fixed bound.
    Fixed(f64),
    /// "cv" or "undersmoothed".
    Named(String),
}

/// The flat key set shared by the config file and the override flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // --- data mapping ---
    pub input: Option<String>,
    pub y_col: Option<String>,
    pub delta_col: Option<String>,
    pub a_col: Option<String>,
    pub w_cols: Option<Vec<String>>,
    pub s_cols: Option<Vec<String>>,
    pub v_cols: Option<Vec<String>>,
    pub output: Option<String>,
    // --- target ---
    pub t: Option<f64>,
    pub v0: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub theta_circle: Option<usize>,
    pub theta_angles: Option<Vec<f64>>,
    // --- estimation ---
    pub h: Option<HSpec>,
    pub lambda: Option<LambdaSpec>,
    pub folds: Option<u32>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub kernel: Option<String>,
    pub kernel_order: Option<usize>,
    pub mech_bounds: Option<Vec<f64>>,
    pub surf_bounds: Option<Vec<f64>>,
    pub grid_factor: Option<f64>,
    pub grid_points: Option<usize>,
    pub multipliers: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub xi: Option<String>,
    pub variance: Option<String>,
    pub gamma: Option<f64>,
    pub basis: Option<String>,
    pub knots: Option<usize>,
    pub degree: Option<u8>,
    pub max_order: Option<usize>,
    pub solver_tol: Option<f64>,
    pub solver_sweeps: Option<usize>,
    // --- simulate ---
    pub scenario: Option<String>,
    pub estimator: Option<String>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub truth_draws: Option<usize>,
    pub out_dir: Option<String>,
    pub trees: Option<usize>,
    pub tree_depth: Option<usize>,
    pub min_leaf: Option<usize>,
}

/// Loads the config file, if one was named.
pub fn load_file(path: Option<&str>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("cannot read config {path}: {e}")))?;
    toml::from_str(&text).map_err(|e| CliError::Schema(format!("config {path}: {e}")))
}

/// Parses an `--h` flag value into a bandwidth request.
pub fn parse_h_flag(raw: &str) -> CliResult<HSpec> {
    if raw == "adaptive" {
        return Ok(HSpec::Named(raw.to_string()));
    }
    let parts: Vec<&str> = raw.split(',').collect();
    let mut values = Vec::with_capacity(parts.len());
    for part in &parts {
        values.push(part.trim().parse::<f64>().map_err(|_| {
            CliError::Schema(format!(
                "--h expects 'adaptive', a number, or a comma-separated list, got '{raw}'"
            ))
        })?);
    }
    if values.len() == 1 {
        Ok(HSpec::Fixed(values[0]))
    } else {
        Ok(HSpec::Grid(values))
    }
}

/// Parses a `--lambda` flag value into a bound request.
pub fn parse_lambda_flag(raw: &str) -> CliResult<LambdaSpec> {
    if raw == "cv" || raw == "undersmoothed" {
        return Ok(LambdaSpec::Named(raw.to_string()));
    }
    raw.parse::<f64>().map(LambdaSpec::Fixed).map_err(|_| {
        CliError::Schema(format!("--lambda expects 'cv', 'undersmoothed', or a number, got '{raw}'"))
    })
}

/// Column mapping resolved from the config.
#[derive(Debug, Clone)]
pub struct DataSpec {
    pub input: String,
    pub y: String,
    pub delta: String,
    pub a: String,
    pub w: Vec<String>,
    pub s: Vec<String>,
    pub v: Vec<String>,
}

fn require<T: Clone>(field: &Option<T>, key: &str) -> CliResult<T> {
    field
        .clone()
        .ok_or_else(|| CliError::Schema(format!("missing required key '{key}' (config file or flag)")))
}

/// Resolves the data-mapping keys, checking the role sets against the
/// declared covariates. The rule and stratum sets may overlap (a stratum
/// covariate is typically also a rule input); together they must cover
/// every declared covariate column.
pub fn resolve_data(cfg: &FileConfig) -> CliResult<DataSpec> {
    let spec = DataSpec {
        input: require(&cfg.input, "input")?,
        y: require(&cfg.y_col, "y_col")?,
        delta: require(&cfg.delta_col, "delta_col")?,
        a: require(&cfg.a_col, "a_col")?,
        w: require(&cfg.w_cols, "w_cols")?,
        s: require(&cfg.s_cols, "s_cols")?,
        v: require(&cfg.v_cols, "v_cols")?,
    };
    if spec.w.is_empty() {
        return Err(CliError::Schema("w_cols must name at least one covariate".into()));
    }
    for (set, key) in [(&spec.s, "s_cols"), (&spec.v, "v_cols")] {
        for name in set.iter() {
            if !spec.w.contains(name) {
                return Err(CliError::Schema(format!(
                    "{key} entry '{name}' is not among w_cols"
                )));
            }
        }
    }
    for name in &spec.w {
        if !spec.s.contains(name) && !spec.v.contains(name) {
            return Err(CliError::Schema(format!(
                "covariate '{name}' belongs to neither s_cols nor v_cols; every declared covariate must serve the rule, the stratum, or both"
            )));
        }
    }
    Ok(spec)
}

fn parse_kernel(raw: &str) -> CliResult<KernelFamily> {
    match raw {
        "uniform" => Ok(KernelFamily::Uniform),
        "epanechnikov" => Ok(KernelFamily::Epanechnikov),
        "gaussian" => Ok(KernelFamily::GaussianTruncated),
        other => Err(CliError::Schema(format!(
            "kernel must be 'uniform', 'epanechnikov', or 'gaussian', got '{other}'"
        ))),
    }
}

fn nuisance(cfg: &FileConfig, gamma: f64) -> CliResult<NuisanceConfig> {
    let policy = match cfg.basis.as_deref() {
        None | Some("plain") => KnotPolicy::plain(),
        Some("binned") => {
            let knots = cfg.knots.unwrap_or(8);
            let degree = cfg.degree.unwrap_or(0);
            KnotPolicy::binned(knots, degree)
        }
        Some(other) => {
            return Err(CliError::Schema(format!(
                "basis must be 'plain' or 'binned', got '{other}'"
            )))
        }
    };
    let mut out = NuisanceConfig { policy, gamma, ..NuisanceConfig::default() };
    if let Some(order) = cfg.max_order {
        out.max_order = order;
    }
    if let Some(tol) = cfg.solver_tol {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(CliError::Schema(format!("solver_tol must be positive, got {tol}")));
        }
        out.opts.tol = tol;
    }
    if let Some(sweeps) = cfg.solver_sweeps {
        if sweeps == 0 {
            return Err(CliError::Schema("solver_sweeps must be at least 1".into()));
        }
        out.opts.max_sweeps = sweeps;
    }
    Ok(out)
}

/// Resolves the estimation keys into a pipeline configuration. The
/// bandwidth rule is left at its default; each command applies its own
/// bandwidth request on top.
pub fn resolve_pipeline(cfg: &FileConfig) -> CliResult<PipelineConfig> {
    let mut out = PipelineConfig::default();
    if let Some(folds) = cfg.folds {
        out.folds = folds;
    }
    if let Some(seed) = cfg.seed {
        out.seed = seed;
    }
    if let Some(alpha) = cfg.alpha {
        out.alpha = alpha;
    }
    if let Some(kernel) = &cfg.kernel {
        out.kernel = parse_kernel(kernel)?;
    }
    if let Some(order) = cfg.kernel_order {
        out.kernel_order = order;
    }
    if let Some(bounds) = &cfg.mech_bounds {
        out.mech_bounds = bounds.clone();
    }
    if let Some(bounds) = &cfg.surf_bounds {
        out.surf_bounds = bounds.clone();
    }
    if let Some(factor) = cfg.grid_factor {
        out.grid_factor = factor;
    }
    if let Some(points) = cfg.grid_points {
        out.grid_points = points;
    }
    if let Some(multipliers) = &cfg.multipliers {
        out.multipliers = multipliers.clone();
    }
    if let Some(kappa) = cfg.kappa {
        out.kappa = kappa;
    } else {
        out.kappa = default_kappa();
    }
    if let Some(xi) = &cfg.xi {
        out.xi = match xi.as_str() {
            "one" => XiMode::One,
            "stabilized" => XiMode::Stabilized,
            other => {
                return Err(CliError::Schema(format!(
                    "xi must be 'one' or 'stabilized', got '{other}'"
                )))
            }
        };
    }
    if let Some(variance) = &cfg.variance {
        out.variance = match variance.as_str() {
            "eif" => VarianceMode::Eif,
            "conservative" => VarianceMode::Conservative,
            other => {
                return Err(CliError::Schema(format!(
                    "variance must be 'eif' or 'conservative', got '{other}'"
                )))
            }
        };
    }
    if cfg.multipliers.as_ref().is_some_and(|m| m.is_empty()) {
        return Err(CliError::Schema("multipliers must not be empty".into()));
    }
    let gamma = cfg.gamma.unwrap_or(0.01);
    out.mechanism = nuisance(cfg, gamma)?;
    out.outcome = nuisance(cfg, 0.0)?;
    out.surface = nuisance(cfg, 0.0)?;
    match &cfg.lambda {
        None | Some(LambdaSpec::Named(_)) => {
            let name = match &cfg.lambda {
                Some(LambdaSpec::Named(name)) => name.as_str(),
                _ => "undersmoothed",
            };
            out.selection = match name {
                "cv" => BoundSelection::CrossValidated,
                "undersmoothed" => BoundSelection::Undersmoothed,
                other => {
                    return Err(CliError::Schema(format!(
                        "lambda must be 'cv', 'undersmoothed', or a number, got '{other}'"
                    )))
                }
            };
        }
        Some(LambdaSpec::Fixed(bound)) => {
            if !bound.is_finite() || *bound < 0.0 {
                return Err(CliError::Schema(format!(
                    "fixed lambda must be a nonnegative number, got {bound}"
                )));
            }
            out.selection = BoundSelection::CrossValidated;
            out.mech_bounds = vec![*bound];
            out.surf_bounds = vec![*bound];
        }
    }
    Ok(out)
}

/// The bandwidth request for the estimate/curve commands (default:
/// adaptive).
pub fn resolve_h(cfg: &FileConfig) -> CliResult<HSpec> {
    match &cfg.h {
        None => Ok(HSpec::Named("adaptive".into())),
        Some(HSpec::Named(name)) if name == "adaptive" => Ok(HSpec::Named(name.clone())),
        Some(HSpec::Named(other)) => Err(CliError::Schema(format!(
            "h must be 'adaptive', a number, or a list of numbers, got '{other}'"
        ))),
        Some(HSpec::Fixed(h)) => {
            if !h.is_finite() || *h <= 0.0 {
                return Err(CliError::Schema(format!("h must be positive, got {h}")));
            }
            Ok(HSpec::Fixed(*h))
        }
        Some(HSpec::Grid(hs)) => {
            if hs.is_empty() {
                return Err(CliError::Schema("h list must not be empty".into()));
            }
            for h in hs {
                if !h.is_finite() || *h <= 0.0 {
                    return Err(CliError::Schema(format!("h values must be positive, got {h}")));
                }
            }
            Ok(HSpec::Grid(hs.clone()))
        }
    }
}

/// Simulation keys resolved into the library's run configuration plus the
/// output directory.
pub struct SimSpec {
    pub config: hal_curve::sim::SimConfig,
    pub out_dir: String,
}

/// Resolves the simulate keys. The estimator kind owns the bound-selection
/// mode and the bandwidth ladder, so `lambda` and `h` are rejected here.
pub fn resolve_sim(cfg: &FileConfig) -> CliResult<SimSpec> {
    if cfg.lambda.is_some() || cfg.h.is_some() {
        return Err(CliError::Schema(
            "simulate derives bound selection from 'estimator' and always runs the adaptive bandwidth ladder; remove 'lambda'/'h'"
                .into(),
        ));
    }
    let scenario = match require(&cfg.scenario, "scenario")?.as_str() {
        "sc1" => Scenario::One,
        "sc2" => Scenario::Two,
        other => {
            return Err(CliError::Schema(format!(
                "scenario must be 'sc1' or 'sc2', got '{other}'"
            )))
        }
    };
    let estimator = match require(&cfg.estimator, "estimator")?.as_str() {
        "hal-undersmoothed" => EstimatorKind::HalUndersmoothed,
        "hal-cv" => EstimatorKind::HalCv,
        "rf-baseline" => EstimatorKind::RfBaseline,
        other => {
            return Err(CliError::Schema(format!(
                "estimator must be 'hal-undersmoothed', 'hal-cv', or 'rf-baseline', got '{other}'"
            )))
        }
    };
    let v0 = require(&cfg.v0, "v0")?;
    if v0.len() != 1 {
        return Err(CliError::Schema(format!(
            "the benchmark designs have a scalar stratum; v0 must hold exactly one value, got {}",
            v0.len()
        )));
    }
    let theta = require(&cfg.theta, "theta")?;
    let pipeline = resolve_pipeline(cfg)?;
    let mut forest = ForestConfig::default();
    if let Some(trees) = cfg.trees {
        forest.trees = trees;
    }
    if let Some(depth) = cfg.tree_depth {
        forest.max_depth = depth;
    }
    if let Some(min_leaf) = cfg.min_leaf {
        forest.min_leaf = min_leaf;
    }
    Ok(SimSpec {
        config: hal_curve::sim::SimConfig {
            scenario,
            estimator,
            n: require(&cfg.n, "n")?,
            reps: require(&cfg.reps, "reps")?,
            seed: cfg.seed.unwrap_or(0),
            t: cfg.t.unwrap_or(0.5),
            v0: v0[0],
            theta,
            pipeline,
            forest,
            truth_draws: cfg.truth_draws.unwrap_or(2_000_000),
        },
        out_dir: require(&cfg.out_dir, "out_dir")?,
    })
}

/// Writes `path` relative to a directory unless it is already absolute.
pub fn in_dir(dir: &str, file: &str) -> String {
    Path::new(dir).join(file).to_string_lossy().into_owned()
}
