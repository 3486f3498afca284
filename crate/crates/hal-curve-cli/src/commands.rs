//! The three subcommands: estimate, curve, simulate.
//!
//! Each command is a thin wrapper: parse and validate inputs, call the
//! library once per requested unit of work, and write its numbers out
//! unchanged. Non-fatal library warnings go to stderr; results go to the
//! configured output files.

use crate::config::{self, FileConfig, HSpec};
use crate::errors::{CliError, CliResult};
use crate::input::load_dataset;
use crate::output;
use hal_curve::curve::CurveEstimate;
use hal_curve::data::Dataset;
use hal_curve::error::Warning;
use hal_curve::pipeline::{estimate_regimen, BandwidthRule, PipelineConfig};
use hal_curve::policy::unit_circle_grid;
use hal_curve::sim;

fn report_warnings(context: &str, warnings: &[Warning]) {
    for w in warnings {
        eprintln!("note ({context}): {w:?}");
    }
}

/// Runs the pipeline for one direction under the bandwidth request,
/// returning one output row per requested bandwidth (the resolved one
/// under the adaptive rule).
fn rows_for_direction(
    data: &Dataset,
    t: f64,
    v0: &[f64],
    theta: &[f64],
    h_spec: &HSpec,
    pipeline: &PipelineConfig,
) -> CliResult<Vec<(Vec<f64>, CurveEstimate)>> {
    let mut rows = Vec::new();
    match h_spec {
        HSpec::Fixed(h) => {
            let mut cfg = pipeline.clone();
            cfg.bandwidth = BandwidthRule::Fixed(*h);
            let est = estimate_regimen(data, t, v0, theta, &cfg)?;
            report_warnings("estimate", &est.warnings);
            rows.push((est.theta.clone(), est.best().clone()));
        }
        HSpec::Grid(grid) => {
            for h in grid {
                let mut cfg = pipeline.clone();
                cfg.bandwidth = BandwidthRule::Fixed(*h);
                let est = estimate_regimen(data, t, v0, theta, &cfg)?;
                report_warnings("estimate", &est.warnings);
                rows.push((est.theta.clone(), est.best().clone()));
            }
        }
        HSpec::Named(_) => {
            let mut cfg = pipeline.clone();
            cfg.bandwidth = BandwidthRule::Adaptive;
            let est = estimate_regimen(data, t, v0, theta, &cfg)?;
            report_warnings("estimate", &est.warnings);
            rows.push((est.theta.clone(), est.best().clone()));
        }
    }
    Ok(rows)
}

/// `estimate`: the smoothed response at one stratum point under one rule.
pub fn cmd_estimate(cfg: &FileConfig) -> CliResult<()> {
    let data_spec = config::resolve_data(cfg)?;
    let data = load_dataset(&data_spec)?;
    let pipeline = config::resolve_pipeline(cfg)?;
    let h_spec = config::resolve_h(cfg)?;
    let v0 = cfg
        .v0
        .clone()
        .ok_or_else(|| CliError::Schema("missing required key 'v0'".into()))?;
    let theta = cfg
        .theta
        .clone()
        .ok_or_else(|| CliError::Schema("missing required key 'theta'".into()))?;
    let output_path = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::Schema("missing required key 'output'".into()))?;
    let t = cfg.t.unwrap_or(0.5);
    let rows = rows_for_direction(&data, t, &v0, &theta, &h_spec, &pipeline)?;
    output::write_estimates(&output_path, &v0, &rows)?;
    println!("wrote {} row(s) to {output_path}", rows.len());
    Ok(())
}

/// The rule directions a `curve` run traces, in output order.
fn curve_directions(cfg: &FileConfig, q: usize) -> CliResult<Vec<Vec<f64>>> {
    let specified = [
        cfg.theta_circle.is_some(),
        cfg.theta_angles.is_some(),
        cfg.theta.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if specified == 0 {
        return Err(CliError::Schema(
            "curve needs one of 'theta_circle' (direction count), 'theta_angles' (radians), or 'theta' (one direction)".into(),
        ));
    }
    if specified > 1 {
        return Err(CliError::Schema(
            "give exactly one of 'theta_circle', 'theta_angles', 'theta'".into(),
        ));
    }
    if let Some(m) = cfg.theta_circle {
        if q != 2 {
            return Err(CliError::Schema(format!(
                "theta_circle needs exactly two rule covariates, the dataset declares {q}"
            )));
        }
        return unit_circle_grid(m).map_err(|e| CliError::Schema(e.to_string()));
    }
    if let Some(angles) = &cfg.theta_angles {
        if q != 2 {
            return Err(CliError::Schema(format!(
                "theta_angles needs exactly two rule covariates, the dataset declares {q}"
            )));
        }
        if angles.is_empty() {
            return Err(CliError::Schema("theta_angles must not be empty".into()));
        }
        return Ok(angles.iter().map(|phi| vec![phi.cos(), phi.sin()]).collect());
    }
    Ok(vec![cfg.theta.clone().expect("checked above")])
}

/// `curve`: the smoothed response over a grid of rule directions.
pub fn cmd_curve(cfg: &FileConfig) -> CliResult<()> {
    let data_spec = config::resolve_data(cfg)?;
    let data = load_dataset(&data_spec)?;
    let pipeline = config::resolve_pipeline(cfg)?;
    let h_spec = config::resolve_h(cfg)?;
    if matches!(h_spec, HSpec::Grid(_)) {
        return Err(CliError::Schema(
            "curve emits one row per direction; h must be a single value or 'adaptive'".into(),
        ));
    }
    let v0 = cfg
        .v0
        .clone()
        .ok_or_else(|| CliError::Schema("missing required key 'v0'".into()))?;
    let output_path = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::Schema("missing required key 'output'".into()))?;
    let t = cfg.t.unwrap_or(0.5);
    let directions = curve_directions(cfg, data_spec.s.len())?;
    let mut rows = Vec::with_capacity(directions.len());
    for theta in &directions {
        rows.extend(rows_for_direction(&data, t, &v0, theta, &h_spec, &pipeline)?);
    }
    output::write_estimates(&output_path, &v0, &rows)?;
    println!("wrote {} row(s) to {output_path}", rows.len());
    Ok(())
}

/// `simulate`: replicate a benchmark scenario and write the aggregate
/// bias and coverage tables.
pub fn cmd_simulate(cfg: &FileConfig) -> CliResult<()> {
    let spec = config::resolve_sim(cfg)?;
    let result = sim::run(&spec.config)?;
    if !result.failures.is_empty() {
        eprintln!(
            "note (simulate): {} of {} replications failed",
            result.failures.len(),
            result.reps_requested
        );
        for message in &result.failures {
            eprintln!("  {message}");
        }
    }
    let bias_path = config::in_dir(&spec.out_dir, "bias.csv");
    let coverage_path = config::in_dir(&spec.out_dir, "coverage.csv");
    output::write_bias(&bias_path, &result.bias)?;
    output::write_coverage(&coverage_path, &result.coverage)?;
    println!(
        "wrote {bias_path} and {coverage_path} ({} replications aggregated)",
        result.reps_done
    );
    Ok(())
}
