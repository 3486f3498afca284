//! Data-adaptive bandwidth choice for the kernel-smoothed curve.
//!
//! Candidate bandwidths scale the rate-optimal reference n^{−1/(2J+r)}
//! (J the kernel order, r the stratum dimension) by a fixed multiplier
//! ladder. Selection then exploits the bias direction visible in the
//! estimates themselves: a least-squares trend of Ψ̂ against h says which
//! way smoothing bias pushes, and the pick is the candidate whose
//! bias-adjusted confidence edge sits furthest in the direction the trend
//! says the truth lies — the largest lower limit when the estimates rise
//! as h shrinks, the smallest upper limit when they fall. Tighter
//! intervals at larger bandwidths thus temper the pull toward tiny h.

use crate::error::{Error, Result, Warning};
use crate::num::normal_quantile;

/// The multiplier ladder applied to the reference rate by default.
pub const DEFAULT_MULTIPLIERS: [f64; 7] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0];

/// The default trend-adjustment quantile, z₀.₉₅.
pub fn default_kappa() -> f64 {
    normal_quantile(0.95)
}

/// Ascending candidate bandwidths `multiplier · n^{−1/(2·order+r)}`.
///
/// # Arguments
///
/// * `n` - sample size (≥ 2).
/// * `r` - stratum dimension (≥ 1).
/// * `order` - kernel order J (≥ 1).
/// * `multipliers` - positive scale factors, in any order.
///
/// # Errors
///
/// [`Error::InvalidInput`] when a bound is violated or a multiplier is
/// nonpositive or non-finite.
pub fn candidate_grid(n: usize, r: usize, order: usize, multipliers: &[f64]) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    if r == 0 || order == 0 {
        return Err(Error::invalid("stratum dimension and kernel order must be at least one"));
    }
    if multipliers.is_empty() {
        return Err(Error::invalid("need at least one multiplier"));
    }
    if multipliers.iter().any(|&m| !m.is_finite() || m <= 0.0) {
        return Err(Error::invalid("multipliers must be positive and finite"));
    }
    let rate = (n as f64).powf(-1.0 / (2 * order + r) as f64);
    let mut grid: Vec<f64> = multipliers.iter().map(|m| m * rate).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    Ok(grid)
}

/// One bandwidth's estimate and (conservative) standard deviation.
#[derive(Debug, Clone, Copy)]
pub struct BandwidthCandidate {
    /// The bandwidth.
    pub h: f64,
    /// The smoothed estimate at this bandwidth.
    pub psi_hat: f64,
    /// The scale σ̂ entering the h-specific margin σ̂/√(n·hʳ).
    pub sigma: f64,
}

/// The selected bandwidth and the trend it was selected under.
#[derive(Debug, Clone)]
pub struct BandwidthChoice {
    /// Index into the candidate sequence.
    pub index: usize,
    /// The selected bandwidth.
    pub h: f64,
    /// Least-squares slope of Ψ̂ against h.
    pub slope: f64,
    /// Set when the estimates carry no usable trend.
    pub warning: Option<Warning>,
}

/// Selects a bandwidth from ascending candidates by the trend rule.
///
/// With slope ≤ 0 (estimates grow as h shrinks) the candidate with the
/// largest Ψ̂ − κ·σ̂/√(n·hʳ) wins; with slope > 0, the smallest
/// Ψ̂ + κ·σ̂/√(n·hʳ). Identical estimates across the grid carry no trend:
/// the largest (most stable) bandwidth is returned with
/// [`Warning::FlatTrend`]. Ties break toward the smaller bandwidth.
///
/// # Arguments
///
/// * `candidates` - ascending bandwidths with estimates and scales.
/// * `n` - sample size behind the estimates.
/// * `r` - stratum dimension.
/// * `kappa` - trend-adjustment multiplier (see [`default_kappa`]).
///
/// # Errors
///
/// [`Error::InvalidInput`] on an empty or unsorted grid, nonpositive
/// bandwidths, non-finite estimates, negative scales, or κ ≤ 0.
pub fn select_bandwidth(
    candidates: &[BandwidthCandidate],
    n: usize,
    r: usize,
    kappa: f64,
) -> Result<BandwidthChoice> {
    if candidates.is_empty() {
        return Err(Error::invalid("need at least one candidate bandwidth"));
    }
    if n < 2 || r == 0 {
        return Err(Error::invalid("need n ≥ 2 and stratum dimension ≥ 1"));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    for c in candidates {
        if !c.h.is_finite() || c.h <= 0.0 || !c.psi_hat.is_finite() || c.sigma.is_nan() || c.sigma < 0.0 {
            return Err(Error::invalid("candidates must have positive h, finite Ψ̂, and σ ≥ 0"));
        }
    }
    if candidates.windows(2).any(|w| w[1].h <= w[0].h) {
        return Err(Error::invalid("candidate bandwidths must be strictly ascending"));
    }
    let m = candidates.len();
    if m == 1 {
        return Ok(BandwidthChoice { index: 0, h: candidates[0].h, slope: 0.0, warning: None });
    }
    if candidates.windows(2).all(|w| w[1].psi_hat == w[0].psi_hat) {
        return Ok(BandwidthChoice {
            index: m - 1,
            h: candidates[m - 1].h,
            slope: 0.0,
            warning: Some(Warning::FlatTrend),
        });
    }
    let h_bar = candidates.iter().map(|c| c.h).sum::<f64>() / m as f64;
    let p_bar = candidates.iter().map(|c| c.psi_hat).sum::<f64>() / m as f64;
    let (mut cov, mut var) = (0.0, 0.0);
    for c in candidates {
        cov += (c.h - h_bar) * (c.psi_hat - p_bar);
        var += (c.h - h_bar) * (c.h - h_bar);
    }
    let slope = cov / var;
    let margin = |c: &BandwidthCandidate| kappa * c.sigma / (n as f64 * c.h.powi(r as i32)).sqrt();
    let mut best = 0;
    for (k, c) in candidates.iter().enumerate() {
        let better = if slope > 0.0 {
            c.psi_hat + margin(c) < candidates[best].psi_hat + margin(&candidates[best])
        } else {
            c.psi_hat - margin(c) > candidates[best].psi_hat - margin(&candidates[best])
        };
        if better {
            best = k;
        }
    }
    Ok(BandwidthChoice { index: best, h: candidates[best].h, slope, warning: None })
}
