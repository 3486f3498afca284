//! CSV emission with reproducible numeric formatting.
//!
//! Floating-point values are written with 17 significant digits
//! (`{:.16e}`), which round-trips every f64 exactly: rerunning a config
//! with the same seed yields byte-identical files, and a reader parsing
//! the text recovers the library's numbers bit for bit.

use crate::errors::{CliError, CliResult};
use hal_curve::curve::CurveEstimate;
use hal_curve::sim::{BiasRow, CoverageRow};
use std::fmt::Write as _;
use std::path::Path;

/// One float, 17 significant digits.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn write_file(path: &str, content: &str) -> CliResult<()> {
    if let Some(parent) = Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Pipeline(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| CliError::Pipeline(format!("cannot write {path}: {e}")))
}

/// Writes the estimate/curve table: one row per (v₀, θ, h).
pub fn write_estimates(
    path: &str,
    v0: &[f64],
    rows: &[(Vec<f64>, CurveEstimate)],
) -> CliResult<()> {
    let r = v0.len();
    let q = rows.first().map_or(0, |(theta, _)| theta.len());
    let mut out = String::new();
    for i in 1..=r {
        let _ = write!(out, "v0_{i},");
    }
    for j in 1..=q {
        let _ = write!(out, "theta_{j},");
    }
    out.push_str(
        "h,psi_hat,sigma_hat,ci_lower,ci_upper,lambda_psi,lambda_ga,lambda_gc,n_eff\n",
    );
    for (theta, est) in rows {
        for v in v0 {
            let _ = write!(out, "{},", fmt_f64(*v));
        }
        for c in theta {
            let _ = write!(out, "{},", fmt_f64(*c));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(est.h_used),
            fmt_f64(est.psi_hat),
            fmt_f64(est.sigma_hat),
            fmt_f64(est.ci_lower),
            fmt_f64(est.ci_upper),
            fmt_f64(est.lambda_psi),
            fmt_f64(est.lambda_ga),
            fmt_f64(est.lambda_gc),
            fmt_f64(est.n_eff),
        );
    }
    write_file(path, &out)
}

/// Writes the standardized-bias table.
pub fn write_bias(path: &str, rows: &[BiasRow]) -> CliResult<()> {
    let mut out = String::from("scenario,estimator,n,h,scaled_bias,mc_se\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.scenario,
            row.estimator,
            row.n,
            fmt_f64(row.h),
            fmt_f64(row.scaled_bias),
            fmt_f64(row.mc_se),
        );
    }
    write_file(path, &out)
}

/// Writes the coverage table.
pub fn write_coverage(path: &str, rows: &[CoverageRow]) -> CliResult<()> {
    let mut out = String::from("scenario,estimator,n,h,coverage,ci_width\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.scenario,
            row.estimator,
            row.n,
            fmt_f64(row.h),
            fmt_f64(row.coverage),
            fmt_f64(row.ci_width),
        );
    }
    write_file(path, &out)
}
