//! Simulation harness: benchmark data-generating processes, ground-truth
//! targets, a random-forest comparison estimator, and the replication
//! runner that aggregates bias and coverage tables.

pub mod dgp;
pub mod rf;
pub mod runner;
pub mod truth;

pub use dgp::{generate, outcome_probability, treatment_probability, uncensored_probability, Scenario};
pub use rf::{Forest, ForestConfig};
pub use runner::{
    run, run_policy, BiasRow, CoverageRow, EstimatorKind, PolicyRunConfig, PolicyRunResult,
    SimConfig, SimResult,
};
pub use truth::{optimal_theta, true_psi, true_psi_h, MIN_TRUTH_DRAWS};
