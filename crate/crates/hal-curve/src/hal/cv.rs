//! Cross-validated selection of the L1 bound.
//!
//! For each candidate bound, every fold's model is trained on the other
//! folds (implemented by zeroing the fold's weights, which leaves the
//! remaining rows' contributions untouched) and evaluated on the held-out
//! rows. The cross-validated loss of a bound is the pooled weighted loss of
//! all out-of-fold predictions,
//!
//! ```text
//! CV(bound) = (1/n) Σ_i w_i ℓ(y_i, η_{−fold(i)}(x_i)),
//! ```
//!
//! and the selector returns the bound minimizing it, breaking ties toward
//! the smaller bound. A single fold means no splitting: training and
//! validation coincide.

use crate::data::ColMatrix;
use crate::error::{Error, Result};
use crate::exec::map_collect;
use crate::hal::solver::{lasso_path, weighted_loss, FitOptions, HalFit, Link};
use crate::nuisance::FoldAssignment;

/// Per-fold path fits plus pooled out-of-fold losses.
#[derive(Debug, Clone)]
pub struct CrossPath {
    /// The candidate bounds, strictly ascending.
    pub bounds: Vec<f64>,
    /// `fold_fits[b][k]` is fold b's fit at bound k (trained off-fold).
    pub fold_fits: Vec<Vec<HalFit>>,
    /// `oof_eta[k][i]` is row i's out-of-fold linear predictor at bound k.
    pub oof_eta: Vec<Vec<f64>>,
    /// Pooled cross-validated loss per bound.
    pub cv_losses: Vec<f64>,
    pub link: Link,
}

impl CrossPath {
    /// Out-of-fold predictions on the response scale at bound index `k`.
    pub fn oof_predictions(&self, k: usize) -> Vec<f64> {
        let probe = &self.fold_fits[0][k];
        self.oof_eta[k].iter().map(|&e| probe.response(e)).collect()
    }
}

/// The cross-validation selector's verdict.
#[derive(Debug, Clone)]
pub struct CvSelection {
    /// Index into the bound path.
    pub index: usize,
    /// The selected bound.
    pub bound: f64,
    /// Cross-validated loss at every bound, for diagnostics.
    pub cv_losses: Vec<f64>,
}

/// Fits the bound path on every fold's training complement.
///
/// # Arguments
///
/// * `design` - full-data design matrix; folds select rows by weight masks.
/// * `outcome`, `weights`, `link` - as in [`fit_constrained`].
/// * `folds` - fold assignment over the design's rows.
/// * `bounds` - strictly ascending candidate bounds.
///
/// # Errors
///
/// [`Error::InvalidInput`] if the folds don't match the design rows or a
/// training complement carries no weight; solver errors propagate.
///
/// [`fit_constrained`]: crate::hal::solver::fit_constrained
pub fn fit_cross_path(
    design: &ColMatrix,
    outcome: &[f64],
    weights: &[f64],
    link: Link,
    folds: &FoldAssignment,
    bounds: &[f64],
    opts: FitOptions,
) -> Result<CrossPath> {
    let n = design.rows();
    if folds.n() != n {
        return Err(Error::invalid(format!(
            "fold assignment covers {} rows, design has {n}",
            folds.n()
        )));
    }
    let b_total = folds.n_folds();

    // Per-fold training weights (the whole sample when B = 1).
    let mut fold_weights: Vec<Vec<f64>> = Vec::with_capacity(b_total as usize);
    for b in 1..=b_total {
        let w_train = folds.train_weights(weights, b);
        if !w_train.iter().any(|w| *w > 0.0) {
            return Err(Error::invalid(format!(
                "training complement of fold {b} carries no weight"
            )));
        }
        fold_weights.push(w_train);
    }

    // Independent per-fold path fits.
    let fold_fits: Vec<Result<Vec<HalFit>>> = map_collect(fold_weights, |w_train| {
        lasso_path(design, outcome, &w_train, link, bounds, opts)
    });
    let mut fits: Vec<Vec<HalFit>> = Vec::with_capacity(b_total as usize);
    for f in fold_fits {
        fits.push(f?);
    }

    // Out-of-fold linear predictors, assembled fold by fold.
    let mut oof_eta = vec![vec![0.0; n]; bounds.len()];
    for (k, eta_k) in oof_eta.iter_mut().enumerate() {
        for b in 1..=b_total {
            let eta_fold = fits[(b - 1) as usize][k].linear_predictor_design(design);
            for i in 0..n {
                if folds.fold_of(i) == b {
                    eta_k[i] = eta_fold[i];
                }
            }
        }
    }
    let cv_losses: Vec<f64> =
        oof_eta.iter().map(|eta| weighted_loss(link, outcome, weights, eta)).collect();

    Ok(CrossPath { bounds: bounds.to_vec(), fold_fits: fits, oof_eta, cv_losses, link })
}

/// Selects the bound with the smallest cross-validated loss (ties toward the
/// smaller bound).
pub fn cv_select_bound(path: &CrossPath) -> CvSelection {
    let mut best = 0;
    for (k, loss) in path.cv_losses.iter().enumerate() {
        if *loss < path.cv_losses[best] {
            best = k;
        }
    }
    CvSelection { index: best, bound: path.bounds[best], cv_losses: path.cv_losses.clone() }
}
