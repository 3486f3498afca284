//! Cross-fitted nuisance estimation: treatment and censoring mechanisms and
//! the outcome regression, with positivity guards.
//!
//! All fits share one pattern: enumerate an indicator basis over the
//! relevant covariates, build the design once, then fit a warm-started path
//! of L1 bounds per fold with the fold's rows removed (weight-masked). Each
//! row's stored prediction comes from the fit that never saw it, and
//! mechanism probabilities are truncated to `[γ, 1−γ]` so inverse weights
//! stay bounded.
//!
//! The three mechanisms differ only in outcome and covariate layout:
//!
//! - propensity: regress `A` on the baseline covariates;
//! - censoring: regress `Δᶜ = Δ + (1−Δ)·I(Y > t)` on `(A, covariates)`, so
//!   the fit can also be evaluated at the counterfactual rule arm;
//! - outcome: regress `I(Y > t)` on the covariates among uncensored
//!   rule-followers, weighted by `1/ĝᶜ`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hal::{
    enumerate_basis_points, fit_cross_path, CrossPath, FitOptions, HalBasis, HalFit, KnotPolicy,
    Link,
};

/// A balanced random partition of rows into folds.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    n: usize,
    b: u32,
    assignment: Vec<u32>,
    pub seed: u64,
}

impl FoldAssignment {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_folds(&self) -> u32 {
        self.b
    }

    /// Fold id of row `i`, in `1..=n_folds`.
    #[inline]
    pub fn fold_of(&self, i: usize) -> u32 {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Row indices belonging to `fold`.
    pub fn rows_in(&self, fold: u32) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] == fold).collect()
    }

    /// Weights for training fold `fold`'s model: the fold's own rows are
    /// zeroed. With a single fold there is no splitting and the weights pass
    /// through unchanged (train = validate).
    pub fn train_weights(&self, w: &[f64], fold: u32) -> Vec<f64> {
        if self.b == 1 {
            return w.to_vec();
        }
        w.iter()
            .enumerate()
            .map(|(i, &wi)| if self.assignment[i] == fold { 0.0 } else { wi })
            .collect()
    }

    /// Weights masked the other way: nonzero only on `fold`'s rows.
    pub fn validation_weights(&self, w: &[f64], fold: u32) -> Vec<f64> {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| if self.assignment[i] == fold { wi } else { 0.0 })
            .collect()
    }

    /// Expands the assignment to a pooled layout with `m` pseudo-rows per
    /// observation: pooled row `i·m + k` inherits observation i's fold.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] when `m` is zero.
    pub fn expand(&self, m: usize) -> Result<FoldAssignment> {
        if m == 0 {
            return Err(Error::invalid("cannot expand folds to zero pseudo-rows per row"));
        }
        let mut assignment = Vec::with_capacity(self.n * m);
        for i in 0..self.n {
            for _ in 0..m {
                assignment.push(self.assignment[i]);
            }
        }
        Ok(FoldAssignment { n: self.n * m, b: self.b, assignment, seed: self.seed })
    }
}

/// Splits `n` rows into `b` balanced folds at random.
///
/// Fold sizes differ by at most one; the same `(n, b, seed)` always yields
/// the same assignment. `b = 1` puts every row in fold 1.
///
/// # Errors
///
/// [`Error::InvalidInput`] if `b` is 0 or exceeds `n`.
pub fn make_folds(n: usize, b: u32, seed: u64) -> Result<FoldAssignment> {
    if n == 0 {
        return Err(Error::invalid("cannot split zero rows"));
    }
    if b == 0 || b as usize > n {
        return Err(Error::invalid(format!("fold count must lie in 1..={n}, got {b}")));
    }
    let mut assignment: Vec<u32> = (0..n).map(|i| (i % b as usize) as u32 + 1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    assignment.shuffle(&mut rng);
    Ok(FoldAssignment { n, b, assignment, seed })
}

/// Censoring-adjusted follow-up indicator Δᶜ = Δ + (1−Δ)·I(Y > t).
#[inline]
pub fn delta_c_value(y: f64, delta: u8, t: f64) -> u8 {
    if delta == 1 || y > t {
        1
    } else {
        0
    }
}

/// Probability of following an arm given the propensity P(A=1|W).
#[inline]
pub fn follow_prob(ga: f64, arm: u8) -> f64 {
    if arm == 1 {
        ga
    } else {
        1.0 - ga
    }
}

/// Clamps a probability into `[γ, 1−γ]`.
#[inline]
pub fn truncate_prob(p: f64, gamma: f64) -> f64 {
    p.clamp(gamma, 1.0 - gamma)
}

/// Shared nuisance-fitting configuration.
#[derive(Debug, Clone, Copy)]
pub struct NuisanceConfig {
    /// Basis knot budget and polynomial augmentation.
    pub policy: KnotPolicy,
    /// Largest interaction order |s| in the basis (capped at the covariate
    /// count).
    pub max_order: usize,
    /// Positivity truncation level γ for mechanism probabilities.
    pub gamma: f64,
    /// Solver controls.
    pub opts: FitOptions,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        NuisanceConfig {
            policy: KnotPolicy::plain(),
            max_order: 2,
            gamma: 0.01,
            opts: FitOptions::default(),
        }
    }
}

/// One cross-fitted model: per-fold fits plus held-out predictions.
#[derive(Debug, Clone)]
pub struct CrossFit {
    /// Fold b's fit (trained without fold b) at index b−1, basis attached.
    pub fits: Vec<HalFit>,
    /// Cross-fitted per-row predictions, truncated when `gamma > 0`.
    pub predictions: Vec<f64>,
    /// Truncation level applied to predictions (0 disables).
    pub gamma: f64,
    /// Point dimension the fits expect (covariates, plus the arm for
    /// censoring models).
    pub dim: usize,
}

impl CrossFit {
    /// Predicts at a raw point with fold `fold`'s model (truncated).
    pub fn predict_fold(&self, fold: u32, point: &[f64], scratch: &mut Vec<f64>) -> Result<f64> {
        let fit = self
            .fits
            .get((fold - 1) as usize)
            .ok_or_else(|| Error::invalid(format!("no fit for fold {fold}")))?;
        let p = fit.predict_point(point, scratch)?;
        Ok(if self.gamma > 0.0 { truncate_prob(p, self.gamma) } else { p })
    }

    /// Cross-fitted predictions at one point per row (row i predicted by the
    /// model that excluded fold(i)).
    pub fn cross_predict(&self, folds: &FoldAssignment, points: &[f64]) -> Result<Vec<f64>> {
        if points.len() != folds.n() * self.dim {
            return Err(Error::invalid(format!(
                "point buffer has {} entries, expected {} x {}",
                points.len(),
                folds.n(),
                self.dim
            )));
        }
        let mut scratch = Vec::new();
        let mut out = Vec::with_capacity(folds.n());
        for i in 0..folds.n() {
            let point = &points[i * self.dim..(i + 1) * self.dim];
            out.push(self.predict_fold(folds.fold_of(i), point, &mut scratch)?);
        }
        Ok(out)
    }
}

/// A path of cross-fitted models over an ascending bound grid.
#[derive(Debug, Clone)]
pub struct CrossFitPath {
    pub bounds: Vec<f64>,
    /// One cross-fitted model per bound.
    pub per_bound: Vec<CrossFit>,
    /// Pooled cross-validated loss per bound.
    pub cv_losses: Vec<f64>,
    pub basis: Arc<HalBasis>,
}

impl CrossFitPath {
    /// Index of the bound minimizing the cross-validated loss (ties toward
    /// the smaller bound).
    pub fn cv_best_index(&self) -> usize {
        let mut best = 0;
        for (k, loss) in self.cv_losses.iter().enumerate() {
            if *loss < self.cv_losses[best] {
                best = k;
            }
        }
        best
    }
}

/// Builds a cross-fit path from a prepared design.
fn cross_path_to_fits(
    path: CrossPath,
    basis: &Arc<HalBasis>,
    gamma: f64,
    dim: usize,
) -> CrossFitPath {
    let n_bounds = path.bounds.len();
    let mut per_bound = Vec::with_capacity(n_bounds);
    for k in 0..n_bounds {
        let mut predictions = path.oof_predictions(k);
        if gamma > 0.0 {
            for p in predictions.iter_mut() {
                *p = truncate_prob(*p, gamma);
            }
        }
        let fits: Vec<HalFit> = path
            .fold_fits
            .iter()
            .map(|fold| fold[k].clone().with_basis(Arc::clone(basis)))
            .collect();
        per_bound.push(CrossFit { fits, predictions, gamma, dim });
    }
    CrossFitPath {
        bounds: path.bounds,
        per_bound,
        cv_losses: path.cv_losses,
        basis: Arc::clone(basis),
    }
}

/// Fits the treatment mechanism ĝᵃ(W) = P(A=1|W) along a bound path.
///
/// # Errors
///
/// [`Error::DegenerateTreatment`] when `A` never varies; basis/solver errors
/// propagate.
pub fn fit_propensity_path(
    data: &Dataset,
    config: &NuisanceConfig,
    bounds: &[f64],
    folds: &FoldAssignment,
) -> Result<CrossFitPath> {
    let a = data.a();
    if a.iter().all(|&v| v == 1) || a.iter().all(|&v| v == 0) {
        return Err(Error::DegenerateTreatment(format!(
            "treatment arm is constant ({}) across all {} rows",
            a[0],
            data.n()
        )));
    }
    let d = data.n_covariates();
    let n = data.n();
    let mut points = Vec::with_capacity(n * d);
    for i in 0..n {
        points.extend_from_slice(data.row(i));
    }
    let selected: Vec<usize> = (0..d).collect();
    let basis = Arc::new(enumerate_basis_points(
        &points,
        n,
        d,
        &selected,
        config.max_order.min(d),
        config.policy,
    )?);
    let design = basis.design(&points, n)?;
    let y: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let w = vec![1.0; n];
    let path = fit_cross_path(&design, &y, &w, Link::Logit, folds, bounds, config.opts)?;
    Ok(cross_path_to_fits(path, &basis, config.gamma, d))
}

/// Single-bound convenience wrapper over [`fit_propensity_path`].
pub fn fit_propensity(
    data: &Dataset,
    config: &NuisanceConfig,
    l1_bound: f64,
    folds: &FoldAssignment,
) -> Result<CrossFit> {
    let mut path = fit_propensity_path(data, config, &[l1_bound], folds)?;
    Ok(path.per_bound.remove(0))
}

/// Point layout used by censoring fits: the arm first, covariates after.
pub fn censoring_point_buffer(data: &Dataset, arms: &[u8]) -> Vec<f64> {
    let d = data.n_covariates();
    let n = data.n();
    let mut points = Vec::with_capacity(n * (d + 1));
    for (i, &arm) in arms.iter().enumerate().take(n) {
        points.push(f64::from(arm));
        points.extend_from_slice(data.row(i));
    }
    points
}

/// Fits the censoring mechanism ĝᶜ(A, W) = P(Δᶜ=1|A, W) along a bound path.
///
/// The fitted models take points in the [`censoring_point_buffer`] layout,
/// so they can be evaluated at the observed arm or at a rule's arm.
pub fn fit_censoring_path(
    data: &Dataset,
    t: f64,
    config: &NuisanceConfig,
    bounds: &[f64],
    folds: &FoldAssignment,
) -> Result<CrossFitPath> {
    let d = data.n_covariates();
    let n = data.n();
    let points = censoring_point_buffer(data, data.a());
    let selected: Vec<usize> = (0..=d).collect();
    let basis = Arc::new(enumerate_basis_points(
        &points,
        n,
        d + 1,
        &selected,
        config.max_order.min(d + 1),
        config.policy,
    )?);
    let design = basis.design(&points, n)?;
    let y: Vec<f64> = data.delta_c(t).iter().map(|&v| v as f64).collect();
    let w = vec![1.0; n];
    let path = fit_cross_path(&design, &y, &w, Link::Logit, folds, bounds, config.opts)?;
    Ok(cross_path_to_fits(path, &basis, config.gamma, d + 1))
}

/// Single-bound convenience wrapper over [`fit_censoring_path`].
pub fn fit_censoring(
    data: &Dataset,
    t: f64,
    config: &NuisanceConfig,
    l1_bound: f64,
    folds: &FoldAssignment,
) -> Result<CrossFit> {
    let mut path = fit_censoring_path(data, t, config, &[l1_bound], folds)?;
    Ok(path.per_bound.remove(0))
}

/// Fits the outcome regression Q̂(W) ≈ P(Y > t | W, follow the rule) along a
/// bound path.
///
/// Training rows are the uncensored rule-followers (`Δᶜ = 1`, `A = arm`),
/// weighted by `1/ĝᶜ`; predictions are produced for every row. Predictions
/// are not γ-truncated (the logit link already keeps them inside (0,1)).
///
/// # Arguments
///
/// * `rule_arm` - the rule's arm d(S_i) per row.
/// * `gc_hat` - cross-fitted censoring probabilities at the observed arm.
///
/// # Errors
///
/// [`Error::EmptyRegimen`] when no row (or no row in some training
/// complement) follows the rule uncensored.
pub fn fit_outcome_q_path(
    data: &Dataset,
    t: f64,
    rule_arm: &[u8],
    gc_hat: &[f64],
    config: &NuisanceConfig,
    bounds: &[f64],
    folds: &FoldAssignment,
) -> Result<CrossFitPath> {
    let n = data.n();
    let d = data.n_covariates();
    if rule_arm.len() != n || gc_hat.len() != n {
        return Err(Error::invalid("rule_arm and gc_hat must cover every row"));
    }
    let dc = data.delta_c(t);
    let mut w = vec![0.0; n];
    let mut any = false;
    for i in 0..n {
        if dc[i] == 1 && data.a()[i] == rule_arm[i] {
            w[i] = 1.0 / gc_hat[i];
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyRegimen(
            "no uncensored row follows the rule; outcome regression has no data".into(),
        ));
    }
    for b in 1..=folds.n_folds() {
        if !folds.train_weights(&w, b).iter().any(|wi| *wi > 0.0) {
            return Err(Error::EmptyRegimen(format!(
                "no uncensored rule-follower outside fold {b}; cannot cross-fit the outcome \
                 regression"
            )));
        }
    }
    let mut points = Vec::with_capacity(n * d);
    for i in 0..n {
        points.extend_from_slice(data.row(i));
    }
    let selected: Vec<usize> = (0..d).collect();
    let basis = Arc::new(enumerate_basis_points(
        &points,
        n,
        d,
        &selected,
        config.max_order.min(d),
        config.policy,
    )?);
    let design = basis.design(&points, n)?;
    let y = data.surv_indicator(t);
    let path = fit_cross_path(&design, &y, &w, Link::Logit, folds, bounds, config.opts)?;
    Ok(cross_path_to_fits(path, &basis, 0.0, d))
}

/// Single-bound convenience wrapper over [`fit_outcome_q_path`].
#[allow(clippy::too_many_arguments)]
pub fn fit_outcome_q(
    data: &Dataset,
    t: f64,
    rule_arm: &[u8],
    gc_hat: &[f64],
    config: &NuisanceConfig,
    l1_bound: f64,
    folds: &FoldAssignment,
) -> Result<CrossFit> {
    let mut path = fit_outcome_q_path(data, t, rule_arm, gc_hat, config, &[l1_bound], folds)?;
    Ok(path.per_bound.remove(0))
}

/// Bundled treatment and censoring mechanisms.
#[derive(Debug, Clone)]
pub struct NuisanceFits {
    pub ga: CrossFit,
    pub gc: CrossFit,
    pub gamma: f64,
}

impl NuisanceFits {
    /// Joint IPW denominator ĝᶜ(A_i, W_i) · P(A = A_i | W_i) per row.
    ///
    /// Both factors are already truncated, so the product is at least γ².
    pub fn ipw_denominator(&self, a: &[u8]) -> Vec<f64> {
        a.iter()
            .enumerate()
            .map(|(i, &ai)| self.gc.predictions[i] * follow_prob(self.ga.predictions[i], ai))
            .collect()
    }
}
