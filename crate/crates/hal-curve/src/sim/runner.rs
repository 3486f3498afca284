//! Replication driver for the simulation study.
//!
//! One [`run`] call fixes a scenario, an estimator, and a sample size,
//! replicates data generation and estimation under per-replication seeds
//! derived from a single master seed, and aggregates standardized bias
//! and interval coverage against Monte Carlo ground truth. Each candidate
//! bandwidth contributes a row targeting its own smoothed truth Ψ₀ₕ, and
//! the trend-selected bandwidth contributes one extra row targeting the
//! unsmoothed Ψ₀ (reported at the mean selected bandwidth). A separate
//! [`run_policy`] driver replicates rule optimization over a circle of
//! candidate directions and summarizes the distance to the oracle rule.

use crate::bandwidth::candidate_grid;
use crate::curve::CurveEstimate;
use crate::error::{Error, Result};
use crate::exec::map_collect;
use crate::kernel::KernelSpec;
use crate::pipeline::{
    estimate_regimen, estimate_with_mechanisms, BandwidthRule, BoundSelection, MechanismInputs,
    PipelineConfig,
};
use crate::policy::{rule_arms, unit_circle_grid, ThetaGrid};
use crate::sim::dgp::{generate, Scenario};
use crate::sim::rf::{Forest, ForestConfig};
use crate::sim::truth::{optimal_theta, true_psi, true_psi_h};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Dedicated seed for ground-truth Monte Carlo, fixed so truth values do
/// not move with the replication seed.
const TRUTH_SEED: u64 = 7_151_821;

/// Stratum dimension of the benchmark designs (V is scalar).
const STRATUM_DIM: usize = 1;

/// Which estimator a simulation run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Full pipeline with undersmoothed bound selection.
    HalUndersmoothed,
    /// Same pipeline with every bound chosen by cross-validation.
    HalCv,
    /// Bagged-tree mechanisms with the cross-validated response surface.
    RfBaseline,
}

impl EstimatorKind {
    /// Stable label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::HalUndersmoothed => "hal-undersmoothed",
            EstimatorKind::HalCv => "hal-cv",
            EstimatorKind::RfBaseline => "rf-baseline",
        }
    }

    fn selection(self) -> BoundSelection {
        match self {
            EstimatorKind::HalUndersmoothed => BoundSelection::Undersmoothed,
            EstimatorKind::HalCv | EstimatorKind::RfBaseline => BoundSelection::CrossValidated,
        }
    }
}

/// Configuration of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Data-generating scenario.
    pub scenario: Scenario,
    /// Estimator under study.
    pub estimator: EstimatorKind,
    /// Sample size per replication.
    pub n: usize,
    /// Number of replications.
    pub reps: usize,
    /// Master seed; everything else derives from it.
    pub seed: u64,
    /// Outcome threshold t.
    pub t: f64,
    /// Stratum evaluation point v₀.
    pub v0: f64,
    /// Rule direction θ (normalized by the pipeline).
    pub theta: Vec<f64>,
    /// Estimation settings; the bandwidth rule is forced to the adaptive
    /// ladder and the bound-selection mode follows the estimator kind.
    pub pipeline: PipelineConfig,
    /// Tree settings for the forest baseline.
    pub forest: ForestConfig,
    /// Monte Carlo draws for each ground-truth value.
    pub truth_draws: usize,
}

/// Standardized-bias summary for one (bandwidth, target) pair.
#[derive(Debug, Clone)]
pub struct BiasRow {
    /// Scenario label ("sc1"/"sc2").
    pub scenario: String,
    /// Estimator label.
    pub estimator: String,
    /// Sample size.
    pub n: usize,
    /// Bandwidth (fixed value, or the mean selected value on the
    /// adaptive row).
    pub h: f64,
    /// "psi0h" for fixed-bandwidth rows, "psi0" for the adaptive row.
    pub target: String,
    /// The ground-truth value the row is judged against.
    pub truth: f64,
    /// Mean over replications of √(n·hʳ)·(ψ̂ − truth).
    pub scaled_bias: f64,
    /// Monte Carlo standard error of that mean.
    pub mc_se: f64,
}

/// Coverage summary for one (bandwidth, target) pair.
#[derive(Debug, Clone)]
pub struct CoverageRow {
    /// Scenario label ("sc1"/"sc2").
    pub scenario: String,
    /// Estimator label.
    pub estimator: String,
    /// Sample size.
    pub n: usize,
    /// Bandwidth (fixed value, or the mean selected value on the
    /// adaptive row).
    pub h: f64,
    /// "psi0h" for fixed-bandwidth rows, "psi0" for the adaptive row.
    pub target: String,
    /// The ground-truth value the row is judged against.
    pub truth: f64,
    /// Fraction of replications whose interval contains the truth.
    pub coverage: f64,
    /// Mean interval width.
    pub ci_width: f64,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone)]
pub struct SimResult {
    /// One standardized-bias row per bandwidth, adaptive row last.
    pub bias: Vec<BiasRow>,
    /// One coverage row per bandwidth, adaptive row last.
    pub coverage: Vec<CoverageRow>,
    /// Candidate bandwidths (ascending), matching the fixed rows.
    pub grid: Vec<f64>,
    /// Smoothed truth per candidate bandwidth.
    pub psi0h: Vec<f64>,
    /// Unsmoothed truth at (v₀, θ).
    pub psi0: f64,
    /// Replications requested.
    pub reps_requested: usize,
    /// Replications that produced an estimate.
    pub reps_done: usize,
    /// One message per failed replication.
    pub failures: Vec<String>,
}

/// Trimmed per-replication record used by the aggregation step.
struct RepRecord {
    per_h: Vec<CurveEstimate>,
    selected: usize,
}

fn check_failures(failures: &[String], reps: usize) -> Result<()> {
    if failures.len() * 10 > reps {
        return Err(Error::invalid(format!(
            "{} of {reps} replications failed (tolerance 10%); first failure: {}",
            failures.len(),
            failures.first().map_or("", |s| s.as_str())
        )));
    }
    Ok(())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Truncates a forest probability prediction into [γ, 1−γ].
fn truncate(p: f64, gamma: f64) -> f64 {
    p.clamp(gamma, 1.0 - gamma)
}

/// Fits bagged-tree treatment and censoring mechanisms and packages them
/// for [`estimate_with_mechanisms`]. The censoring forest regresses the
/// followed-through indicator on (arm, covariates), mirroring the layout
/// of the model-based censoring fit; rule predictions re-query the same
/// forest at the rule's arm. The bound fields are set to zero: no L1
/// bound exists for a forest.
fn rf_mechanisms(
    data: &crate::data::Dataset,
    t: f64,
    theta: &[f64],
    forest: &ForestConfig,
    gamma: f64,
    seed_a: u64,
    seed_c: u64,
) -> Result<MechanismInputs> {
    let n = data.n();
    let d = data.n_covariates();
    let mut x = Vec::with_capacity(n * d);
    for i in 0..n {
        x.extend_from_slice(data.row(i));
    }
    let a_resp: Vec<f64> = data.a().iter().map(|&a| f64::from(a)).collect();
    let forest_a = Forest::fit(&x, n, d, &a_resp, forest, seed_a)?;
    let mut ga = Vec::with_capacity(n);
    for i in 0..n {
        ga.push(truncate(forest_a.predict(data.row(i))?, gamma));
    }

    let dc = data.delta_c(t);
    let dc_resp: Vec<f64> = dc.iter().map(|&v| f64::from(v)).collect();
    let mut xc = Vec::with_capacity(n * (d + 1));
    for i in 0..n {
        xc.push(f64::from(data.a()[i]));
        xc.extend_from_slice(data.row(i));
    }
    let forest_c = Forest::fit(&xc, n, d + 1, &dc_resp, forest, seed_c)?;
    let arms = rule_arms(data, theta)?;
    let mut gc_obs = Vec::with_capacity(n);
    let mut gc_rule = Vec::with_capacity(n);
    let mut point = vec![0.0; d + 1];
    for (i, &arm) in arms.iter().enumerate() {
        point[0] = f64::from(data.a()[i]);
        point[1..].copy_from_slice(data.row(i));
        gc_obs.push(truncate(forest_c.predict(&point)?, gamma));
        point[0] = f64::from(arm);
        gc_rule.push(truncate(forest_c.predict(&point)?, gamma));
    }
    Ok(MechanismInputs {
        ga,
        gc_obs,
        gc_rule,
        lambda_ga: 0.0,
        lambda_gc: 0.0,
        dcar_ga: Vec::new(),
        dcar_gc: Vec::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn aggregate(
    scenario: &str,
    estimator: &str,
    n: usize,
    grid: &[f64],
    psi0h: &[f64],
    psi0: f64,
    records: &[RepRecord],
) -> (Vec<BiasRow>, Vec<CoverageRow>) {
    let mut bias = Vec::with_capacity(grid.len() + 1);
    let mut coverage = Vec::with_capacity(grid.len() + 1);
    let reps = records.len() as f64;
    for (k, (&h, &truth)) in grid.iter().zip(psi0h).enumerate() {
        let scale = (n as f64 * h.powi(STRATUM_DIM as i32)).sqrt();
        let scaled: Vec<f64> =
            records.iter().map(|r| scale * (r.per_h[k].psi_hat - truth)).collect();
        let (scaled_bias, mc_se) = mean_and_se(&scaled);
        let hits = records
            .iter()
            .filter(|r| r.per_h[k].ci_lower <= truth && truth <= r.per_h[k].ci_upper)
            .count();
        let width = records
            .iter()
            .map(|r| r.per_h[k].ci_upper - r.per_h[k].ci_lower)
            .sum::<f64>()
            / reps;
        bias.push(BiasRow {
            scenario: scenario.to_string(),
            estimator: estimator.to_string(),
            n,
            h,
            target: "psi0h".to_string(),
            truth,
            scaled_bias,
            mc_se,
        });
        coverage.push(CoverageRow {
            scenario: scenario.to_string(),
            estimator: estimator.to_string(),
            n,
            h,
            target: "psi0h".to_string(),
            truth,
            coverage: hits as f64 / reps,
            ci_width: width,
        });
    }
    // Adaptive row: each replication contributes its own selected
    // bandwidth; the row reports the mean of those.
    let mean_h = records.iter().map(|r| r.per_h[r.selected].h_used).sum::<f64>() / reps;
    let scaled: Vec<f64> = records
        .iter()
        .map(|r| {
            let best = &r.per_h[r.selected];
            (n as f64 * best.h_used.powi(STRATUM_DIM as i32)).sqrt() * (best.psi_hat - psi0)
        })
        .collect();
    let (scaled_bias, mc_se) = mean_and_se(&scaled);
    let hits = records
        .iter()
        .filter(|r| {
            let best = &r.per_h[r.selected];
            best.ci_lower <= psi0 && psi0 <= best.ci_upper
        })
        .count();
    let width = records
        .iter()
        .map(|r| {
            let best = &r.per_h[r.selected];
            best.ci_upper - best.ci_lower
        })
        .sum::<f64>()
        / reps;
    bias.push(BiasRow {
        scenario: scenario.to_string(),
        estimator: estimator.to_string(),
        n,
        h: mean_h,
        target: "psi0".to_string(),
        truth: psi0,
        scaled_bias,
        mc_se,
    });
    coverage.push(CoverageRow {
        scenario: scenario.to_string(),
        estimator: estimator.to_string(),
        n,
        h: mean_h,
        target: "psi0".to_string(),
        truth: psi0,
        coverage: hits as f64 / reps,
        ci_width: width,
    });
    (bias, coverage)
}

/// One replication: generate data under the replication's sub-seeds,
/// estimate with the configured estimator, and keep the bandwidth ladder.
fn one_replication(
    cfg: &SimConfig,
    pipeline: &PipelineConfig,
    rep_seed: u64,
) -> Result<RepRecord> {
    let mut rs = ChaCha8Rng::seed_from_u64(rep_seed);
    let data_seed: u64 = rs.random();
    let fold_seed: u64 = rs.random();
    let rf_a_seed: u64 = rs.random();
    let rf_c_seed: u64 = rs.random();
    let data = generate(cfg.scenario, cfg.n, data_seed)?;
    let mut rep_cfg = pipeline.clone();
    rep_cfg.seed = fold_seed;
    let est = match cfg.estimator {
        EstimatorKind::HalUndersmoothed | EstimatorKind::HalCv => {
            estimate_regimen(&data, cfg.t, &[cfg.v0], &cfg.theta, &rep_cfg)?
        }
        EstimatorKind::RfBaseline => {
            let mech = rf_mechanisms(
                &data,
                cfg.t,
                &cfg.theta,
                &cfg.forest,
                rep_cfg.mechanism.gamma,
                rf_a_seed,
                rf_c_seed,
            )?;
            estimate_with_mechanisms(&data, cfg.t, &[cfg.v0], &cfg.theta, mech, &rep_cfg)?
        }
    };
    Ok(RepRecord { per_h: est.per_h, selected: est.selected })
}

/// Runs one simulation cell and aggregates it against ground truth.
///
/// # Errors
///
/// [`Error::InvalidInput`] on a degenerate configuration or when more
/// than 10% of replications fail; truth-related errors propagate.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    if cfg.reps == 0 {
        return Err(Error::invalid("simulation needs at least one replication"));
    }
    let mut pipeline = cfg.pipeline.clone();
    pipeline.selection = cfg.estimator.selection();
    pipeline.bandwidth = BandwidthRule::Adaptive;

    let grid = candidate_grid(cfg.n, STRATUM_DIM, pipeline.kernel_order, &pipeline.multipliers)?;
    let psi0 = true_psi(cfg.v0, &cfg.theta, cfg.truth_draws, TRUTH_SEED)?;
    let mut psi0h = Vec::with_capacity(grid.len());
    for &h in &grid {
        let kernel = KernelSpec::new(pipeline.kernel, vec![cfg.v0], h, pipeline.kernel_order)?;
        psi0h.push(true_psi_h(&cfg.theta, &kernel, cfg.truth_draws, TRUTH_SEED)?);
    }

    // Per-replication seeds come off the master stream sequentially, so
    // the replicate bodies can run in parallel (or not) without touching
    // the results; collection order is the replication order either way.
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rep_seeds: Vec<(usize, u64)> = (0..cfg.reps).map(|rep| (rep, master.random())).collect();
    let outcomes = map_collect(rep_seeds, |(rep, rep_seed)| {
        one_replication(cfg, &pipeline, rep_seed).map_err(|e| format!("replication {rep}: {e}"))
    });
    let mut records = Vec::with_capacity(cfg.reps);
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => {
                debug_assert_eq!(record.per_h.len(), grid.len());
                records.push(record);
            }
            Err(message) => failures.push(message),
        }
    }
    check_failures(&failures, cfg.reps)?;
    if records.is_empty() {
        return Err(Error::invalid("no replication succeeded"));
    }
    let (bias, coverage) = aggregate(
        cfg.scenario.label(),
        cfg.estimator.label(),
        cfg.n,
        &grid,
        &psi0h,
        psi0,
        &records,
    );
    Ok(SimResult {
        bias,
        coverage,
        grid,
        psi0h,
        psi0,
        reps_requested: cfg.reps,
        reps_done: records.len(),
        failures,
    })
}

/// Configuration of a rule-optimization replication study.
#[derive(Debug, Clone)]
pub struct PolicyRunConfig {
    /// Data-generating scenario.
    pub scenario: Scenario,
    /// Sample size per replication.
    pub n: usize,
    /// Number of replications.
    pub reps: usize,
    /// Master seed.
    pub seed: u64,
    /// Outcome threshold t.
    pub t: f64,
    /// Stratum evaluation point v₀.
    pub v0: f64,
    /// Number of directions on the unit circle.
    pub directions: usize,
    /// Comparison bandwidth for the smoothed values.
    pub h: f64,
    /// Estimation settings for the pooled search.
    pub pipeline: PipelineConfig,
    /// Monte Carlo draws for the oracle direction.
    pub truth_draws: usize,
}

/// Replicated rule-optimization summary.
#[derive(Debug, Clone)]
pub struct PolicyRunResult {
    /// Oracle direction: the truth-maximizing grid point.
    pub theta_star: Vec<f64>,
    /// Index of the oracle direction in the circle grid.
    pub star_index: usize,
    /// Per-replication Euclidean distance ‖θ̂ − θ*‖.
    pub distances: Vec<f64>,
    /// Median of those distances.
    pub median_distance: f64,
    /// One message per failed replication.
    pub failures: Vec<String>,
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// Replicates the smoothed-value rule search over a circle of candidate
/// directions and reports distances to the oracle direction.
///
/// # Errors
///
/// As [`run`].
pub fn run_policy(cfg: &PolicyRunConfig) -> Result<PolicyRunResult> {
    if cfg.reps == 0 {
        return Err(Error::invalid("policy study needs at least one replication"));
    }
    let directions = unit_circle_grid(cfg.directions)?;
    let (star_index, theta_star) =
        optimal_theta(cfg.v0, &directions, cfg.truth_draws, TRUTH_SEED)?;
    let grid = ThetaGrid::uniform(directions)?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rep_seeds: Vec<(usize, u64)> = (0..cfg.reps).map(|rep| (rep, master.random())).collect();
    let outcomes = map_collect(rep_seeds, |(rep, rep_seed)| -> std::result::Result<f64, String> {
        let mut rs = ChaCha8Rng::seed_from_u64(rep_seed);
        let data_seed: u64 = rs.random();
        let fold_seed: u64 = rs.random();
        let data = generate(cfg.scenario, cfg.n, data_seed)
            .map_err(|e| format!("replication {rep}: {e}"))?;
        let mut rep_cfg = cfg.pipeline.clone();
        rep_cfg.seed = fold_seed;
        let search =
            crate::pipeline::optimize_policy(&data, cfg.t, &[cfg.v0], &grid, cfg.h, &rep_cfg)
                .map_err(|e| format!("replication {rep}: {e}"))?;
        Ok(search
            .choice
            .theta
            .iter()
            .zip(&theta_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    });
    let mut distances = Vec::with_capacity(cfg.reps);
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(dist) => distances.push(dist),
            Err(message) => failures.push(message),
        }
    }
    check_failures(&failures, cfg.reps)?;
    if distances.is_empty() {
        return Err(Error::invalid("no replication succeeded"));
    }
    let mut sorted = distances.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_distance = median(&sorted);
    Ok(PolicyRunResult { theta_star, star_index, distances, median_distance, failures })
}
