//! Highly adaptive lasso: indicator-basis enumeration and L1-bound-
//! constrained fitting.
//!
//! The pieces compose in three layers:
//!
//! - [`basis`] enumerates tensor-indicator basis functions anchored at
//!   observed covariate values and renders design matrices;
//! - [`solver`] fits coefficient vectors under an L1 bound (intercept
//!   included) by penalized coordinate descent with a bound→penalty
//!   bisection;
//! - [`cv`] cross-fits a path of bounds over folds and selects the bound
//!   with the smallest cross-validated loss.

pub mod basis;
pub mod cv;
pub mod solver;

pub use basis::{enumerate_basis, enumerate_basis_points, BasisEntry, HalBasis, KnotPolicy};
pub use cv::{cv_select_bound, fit_cross_path, CrossPath, CvSelection};
pub use solver::{fit_constrained, lasso_path, weighted_loss, FitOptions, HalFit, Link};
