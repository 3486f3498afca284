//! Monte Carlo ground truth for the benchmark scenarios.
//!
//! Both scenarios share the outcome law, and the counterfactual quantities
//! condition on treatment being set by the rule, so every truth here is
//! scenario-free: Ψ₀(v₀, θ) integrates the outcome probability under the
//! rule's arm over W | V = v₀ (W is independent of V), and the smoothed
//! target Ψ₀ₕ(v₀, θ) reweights the same integrand by the kernel over V.
//! Truth values come from plain Monte Carlo with a dedicated seed; the
//! test suite cross-checks them against deterministic nested quadrature.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::policy::decision;
use crate::sim::dgp::outcome_probability;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Smallest Monte Carlo size accepted for a truth computation.
pub const MIN_TRUTH_DRAWS: usize = 100_000;

fn check_draws(draws: usize) -> Result<()> {
    if draws < MIN_TRUTH_DRAWS {
        return Err(Error::invalid(format!(
            "truth computations need at least {MIN_TRUTH_DRAWS} draws, got {draws}"
        )));
    }
    Ok(())
}

/// The rule's counterfactual outcome probability at one (v, w).
fn counterfactual_outcome(theta: &[f64], v: f64, w: f64) -> Result<f64> {
    let arm = decision(theta, &[v, w])?;
    Ok(outcome_probability(arm, v, w))
}

/// Monte Carlo value of Ψ₀(v₀, θ) = E_W[ P(Y=1 | A=d(v₀,W), v₀, W) ].
///
/// # Errors
///
/// [`Error::InvalidInput`] when `draws` is below [`MIN_TRUTH_DRAWS`] or θ
/// has the wrong dimension.
pub fn true_psi(v0: f64, theta: &[f64], draws: usize, seed: u64) -> Result<f64> {
    check_draws(draws)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let w: f64 = rng.random_range(-1.0..1.0);
        acc += counterfactual_outcome(theta, v0, w)?;
    }
    Ok(acc / draws as f64)
}

/// Monte Carlo value of the kernel-smoothed target
/// Ψ₀ₕ(v₀, θ) = E[K_h(V−v₀)·Ψ₀(V, θ)] / E[K_h(V−v₀)], V ~ U(−1.3, 1.3).
/// The evaluation point v₀ is the kernel's center.
///
/// # Errors
///
/// As [`true_psi`], plus [`Error::ZeroKernelMass`] when no draw lands in
/// the kernel's support.
pub fn true_psi_h(theta: &[f64], kernel: &KernelSpec, draws: usize, seed: u64) -> Result<f64> {
    check_draws(draws)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut num = 0.0;
    let mut den = 0.0;
    for _ in 0..draws {
        let v: f64 = rng.random_range(-1.3..1.3);
        let w: f64 = rng.random_range(-1.0..1.0);
        let k = kernel.weight(&[v]);
        if k > 0.0 {
            num += k * counterfactual_outcome(theta, v, w)?;
            den += k;
        }
    }
    if den <= 0.0 {
        return Err(Error::ZeroKernelMass { h: kernel.bandwidth() });
    }
    Ok(num / den)
}

/// The grid direction maximizing the unsmoothed truth Ψ₀(v₀, ·).
///
/// Every direction is scored with the same seed so the comparison shares
/// its Monte Carlo noise; ties break toward the smaller index.
///
/// # Errors
///
/// [`Error::InvalidInput`] on an empty grid or insufficient draws.
pub fn optimal_theta(
    v0: f64,
    grid: &[Vec<f64>],
    draws: usize,
    seed: u64,
) -> Result<(usize, Vec<f64>)> {
    if grid.is_empty() {
        return Err(Error::invalid("need at least one candidate direction"));
    }
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, theta) in grid.iter().enumerate() {
        let val = true_psi(v0, theta, draws, seed)?;
        if val > best_val {
            best_val = val;
            best = j;
        }
    }
    Ok((best, grid[best].clone()))
}
