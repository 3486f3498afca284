//! Benchmark data-generating processes.
//!
//! Two observational scenarios share the same covariate, censoring, and
//! outcome laws and differ only in treatment assignment: scenario one
//! randomizes treatment (a trial), scenario two confounds it with both
//! covariates. The rule covariates are S = (V, W) and the smoothing
//! stratum is V alone, so the generated datasets mark column 0 with both
//! roles.

use crate::error::Result;
use crate::num::expit;
use crate::Dataset;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Which treatment-assignment law generates the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Randomized treatment: P(A=1) = 1/2.
    One,
    /// Confounded treatment: P(A=1|V,W) = expit(0.7W + 0.5V + 0.5VW).
    Two,
}

impl Scenario {
    /// Stable label used in reports and CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Scenario::One => "sc1",
            Scenario::Two => "sc2",
        }
    }
}

/// P(Y = 1 | A, V, W) = expit(0.5W + V² + 2VW − 2AVW), shared by both
/// scenarios (and therefore by every truth computation).
pub fn outcome_probability(a: u8, v: f64, w: f64) -> f64 {
    expit(0.5 * w + v * v + 2.0 * v * w - 2.0 * f64::from(a) * v * w)
}

/// P(A = 1 | V, W) under the given scenario.
pub fn treatment_probability(scenario: Scenario, v: f64, w: f64) -> f64 {
    match scenario {
        Scenario::One => 0.5,
        Scenario::Two => expit(0.7 * w + 0.5 * v + 0.5 * v * w),
    }
}

/// P(Δ = 1 | V, W) = expit(0.5W − 0.5V): the probability the outcome is
/// observed (not censored).
pub fn uncensored_probability(v: f64, w: f64) -> f64 {
    expit(0.5 * w - 0.5 * v)
}

/// Draws one benchmark dataset of `n` observations.
///
/// Covariates are V ~ U(−1.3, 1.3) and W ~ U(−1, 1), independent. Per
/// observation the draw order is fixed (v, w, a, δ, y) so identical seeds
/// give identical datasets. Columns are (v, w) with the rule set {0, 1}
/// and the stratum {0}.
///
/// # Errors
///
/// Only [`Dataset::new`] validation errors (n = 0).
pub fn generate(scenario: Scenario, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let v: f64 = rng.random_range(-1.3..1.3);
        let w: f64 = rng.random_range(-1.0..1.0);
        let arm = u8::from(rng.random::<f64>() < treatment_probability(scenario, v, w));
        let dlt = u8::from(rng.random::<f64>() < uncensored_probability(v, w));
        let out = f64::from(rng.random::<f64>() < outcome_probability(arm, v, w));
        y.push(out);
        delta.push(dlt);
        a.push(arm);
        x.push(v);
        x.push(w);
    }
    Dataset::new(y, delta, a, x, vec!["v".into(), "w".into()], vec![0, 1], vec![0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn outcome_law_matches_hand_values() {
        // At (A, V, W) = (1, 0.5, 0.5): 0.25 + 0.25 + 0.5 − 0.5 = 0.5.
        assert_abs_diff_eq!(outcome_probability(1, 0.5, 0.5), expit(0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(outcome_probability(1, 0.5, 0.5), 0.622_459_331_201_854_6, epsilon = 1e-12);
        // All-zero covariates hit the logistic midpoint for either arm.
        assert_abs_diff_eq!(outcome_probability(0, 0.0, 0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(outcome_probability(1, 0.0, 0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn randomized_scenario_balances_treatment() {
        let data = generate(Scenario::One, 100_000, 7).unwrap();
        let mean_a =
            data.a().iter().map(|&v| f64::from(v)).sum::<f64>() / data.n() as f64;
        assert!((mean_a - 0.5).abs() < 0.01, "mean treatment {mean_a}");
    }

    #[test]
    fn confounded_scenario_ties_treatment_to_covariates() {
        let data = generate(Scenario::Two, 60_000, 8).unwrap();
        let n = data.n() as f64;
        let mean_a = data.a().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let mean_w = (0..data.n()).map(|i| data.covariate(i, 1)).sum::<f64>() / n;
        let cov = (0..data.n())
            .map(|i| (f64::from(data.a()[i]) - mean_a) * (data.covariate(i, 1) - mean_w))
            .sum::<f64>()
            / n;
        assert!(cov > 0.02, "treatment should correlate with W, got covariance {cov}");

        let trial = generate(Scenario::One, 60_000, 8).unwrap();
        let t_mean_a =
            trial.a().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let t_cov = (0..trial.n())
            .map(|i| (f64::from(trial.a()[i]) - t_mean_a) * trial.covariate(i, 1))
            .sum::<f64>()
            / n;
        assert!(t_cov.abs() < 0.01, "randomized arm should be uncorrelated, got {t_cov}");
    }

    #[test]
    fn covariates_fill_their_supports() {
        let data = generate(Scenario::One, 20_000, 3).unwrap();
        let (mut vmin, mut vmax, mut wmin, mut wmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for i in 0..data.n() {
            let v = data.covariate(i, 0);
            let w = data.covariate(i, 1);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
            wmin = wmin.min(w);
            wmax = wmax.max(w);
            assert!((-1.3..1.3).contains(&v));
            assert!((-1.0..1.0).contains(&w));
        }
        assert!(vmin < -1.2 && vmax > 1.2);
        assert!(wmin < -0.95 && wmax > 0.95);
        // Role columns: the rule reads both covariates, the stratum is V.
        assert_eq!(data.s_cols(), &[0, 1]);
        assert_eq!(data.v_cols(), &[0]);
    }

    #[test]
    fn identical_seeds_reproduce_the_sample() {
        let one = generate(Scenario::Two, 500, 42).unwrap();
        let two = generate(Scenario::Two, 500, 42).unwrap();
        assert_eq!(one.y(), two.y());
        assert_eq!(one.a(), two.a());
        for i in 0..one.n() {
            assert_eq!(one.covariate(i, 0).to_bits(), two.covariate(i, 0).to_bits());
        }
        let other = generate(Scenario::Two, 500, 43).unwrap();
        assert_ne!(one.y(), other.y());
    }
}
