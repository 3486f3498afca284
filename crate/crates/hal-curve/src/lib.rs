//! Nonparametric estimation of covariate-localized treatment-rule response
//! curves.
//!
//! Given right-censored observational data, a family of linear decision
//! rules indexed by θ, and a stratum value v₀, the crate estimates the
//! counterfactual probability Ψ(v₀, θ) that the outcome survives a horizon
//! `t` when treatment is assigned by the rule, locally at V = v₀. The
//! pipeline is:
//!
//! 1. fit treatment and censoring mechanisms with the highly adaptive lasso
//!    (indicator basis, L1-bound constraint) and cross-fitting ([`nuisance`]);
//! 2. fit the rule-response surface Ψ(θ, V) by inverse-probability-weighted
//!    HAL and smooth it over V with a product kernel ([`curve`]);
//! 3. pick the L1 bounds by undersmoothing criteria that drive the relevant
//!    score terms below noise level ([`undersmoothing`]);
//! 4. pick the bandwidth from a candidate grid by a plateau rule
//!    ([`bandwidth`]);
//! 5. report influence-function confidence intervals ([`curve`]) and, when
//!    asked, the rule maximizing the estimated response ([`policy`]).
//!
//! The [`sim`] module generates the two benchmark scenarios and replicates
//! the bias/coverage experiments; everything is deterministic given seeds.

pub mod bandwidth;
pub mod curve;
pub mod data;
pub mod error;
pub mod exec;
pub mod hal;
pub mod kernel;
pub mod num;
pub mod nuisance;
pub mod pipeline;
pub mod policy;
pub mod sim;
pub mod undersmoothing;

pub use data::{ColMatrix, Dataset};
pub use error::{Error, Result};
