//! Counterfactual response-curve estimation: the pooled inverse-weighted
//! surface fit, kernel smoothing at a stratum value, and influence-based
//! inference.
//!
//! The target is the probability of surviving past a horizon under a
//! candidate rule, as a function of the rule index θ at a fixed stratum
//! value v₀. Estimation proceeds in three steps:
//!
//! 1. **Surface fit.** Each observation is replicated once per candidate
//!    direction θ_k into a pooled pseudo-sample with covariates (θ_k, V_i)
//!    and outcome I(Y_i > t). Pseudo-rows are weighted by the
//!    inverse-probability weight Δᶜ·I(A = d^θ)·ξ/Ĝ — nonzero only for
//!    uncensored rule-followers — and a constrained logistic fit over an
//!    indicator basis produces the surface Ψ_n(θ, ·). The fit is
//!    cross-fitted: fold b's surface is trained without fold b's rows.
//! 2. **Smoothing.** The curve estimate at (v₀, θ) is a kernel-weighted
//!    average of out-of-fold surface values over each validation fold,
//!    averaged across folds and clipped to [0, 1].
//! 3. **Inference.** An augmented influence function combines the
//!    inverse-weighted survival indicator with outcome-regression terms;
//!    its empirical second moment (standardized by the bandwidth volume
//!    hʳ) yields a variance estimate and Wald-type confidence interval
//!    shrinking at the local rate √(n·hʳ).

use std::sync::Arc;

use crate::data::Dataset;
use crate::error::{Error, Result, Warning};
use crate::hal::{enumerate_basis_points, fit_cross_path, CrossPath, HalBasis, HalFit, Link};
use crate::kernel::KernelSpec;
use crate::nuisance::{follow_prob, FoldAssignment, NuisanceConfig};
use crate::num::normal_quantile;
use crate::policy::{decision, ThetaGrid};

/// Stabilizer choice for the inverse-probability weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XiMode {
    /// ξ ≡ 1: plain inverse-probability weights.
    #[default]
    One,
    /// ξ(θ, V) estimated by regressing the uncensored-follower indicator
    /// on the stratum covariates, stabilizing the weight scale.
    Stabilized,
}

/// Variance estimator flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// Empirical second moment of the estimated influence function.
    #[default]
    Eif,
    /// Conservative form: second moment of the kernel-weighted surface
    /// deviations, which upper-bounds the influence-function variance.
    Conservative,
}

/// The pooled pseudo-sample behind a surface fit.
///
/// Pseudo-row `i·m + k` pairs observation `i` with direction `k`; all
/// per-pseudo-row buffers use that layout.
#[derive(Debug, Clone)]
pub struct PooledDesign {
    /// Number of observations n.
    pub n: usize,
    /// Number of directions m.
    pub m: usize,
    /// Covariate dimension of each pseudo-row (q + r, or r when a single
    /// direction makes the θ coordinates degenerate).
    pub dim: usize,
    /// Row-major pseudo-row covariates.
    pub points: Vec<f64>,
    /// Survival indicator I(Y_i > t), replicated per direction.
    pub outcome: Vec<f64>,
    /// Fitting weights m·w(θ_k)·Δᶜ·I(A=d^θ)·ξ/Ĝ.
    pub weights: Vec<f64>,
    /// Uncensored-follower indicator Δᶜ·I(A_i = d^{θ_k}(S_i)).
    pub follow: Vec<u8>,
    /// Joint mechanism denominator Ĝ; meaningful where `follow` is 1 (the
    /// censoring factor is evaluated at the observed arm).
    pub denom: Vec<f64>,
    /// Stabilizer values ξ (all ones under [`XiMode::One`]).
    pub xi: Vec<f64>,
    /// The rule's arm d^{θ_k}(S_i).
    pub arms: Vec<u8>,
}

/// Assembles the pooled pseudo-sample for a surface fit.
///
/// # Arguments
///
/// * `data` - the observed sample.
/// * `t` - survival horizon.
/// * `grid` - candidate directions with mixing weights.
/// * `ga_pred` - cross-fitted treatment probabilities P(A=1|W), truncated.
/// * `gc_pred` - cross-fitted censoring probabilities at the observed arm,
///   truncated.
/// * `xi` - optional nonnegative stabilizer per pseudo-row (defaults to
///   all ones; zeros localize the fit by dropping the row).
///
/// # Errors
///
/// [`Error::InvalidInput`] on length mismatches, a rule dimension that
/// differs from the dataset's S columns, or nonpositive denominators.
pub fn pool_rows(
    data: &Dataset,
    t: f64,
    grid: &ThetaGrid,
    ga_pred: &[f64],
    gc_pred: &[f64],
    xi: Option<&[f64]>,
) -> Result<PooledDesign> {
    let n = data.n();
    let m = grid.len();
    if ga_pred.len() != n || gc_pred.len() != n {
        return Err(Error::invalid("mechanism predictions must cover every row"));
    }
    if let Some(x) = xi {
        if x.len() != n * m {
            return Err(Error::invalid(format!(
                "stabilizer has {} entries, expected {}",
                x.len(),
                n * m
            )));
        }
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("stabilizer values must be nonnegative and finite"));
        }
    }
    let q = grid.dim();
    let r = data.v_cols().len();
    if data.s_cols().len() != q {
        return Err(Error::invalid(format!(
            "rule dimension {q} does not match the dataset's {} rule covariates",
            data.s_cols().len()
        )));
    }
    // A single direction contributes constant θ coordinates, which an
    // indicator basis can only turn into redundant intercept copies; drop
    // them and fit over the stratum covariates alone.
    let dim = if m == 1 { r } else { q + r };
    let dc = data.delta_c(t);
    let surv = data.surv_indicator(t);

    let mut pooled = PooledDesign {
        n,
        m,
        dim,
        points: Vec::with_capacity(n * m * dim),
        outcome: Vec::with_capacity(n * m),
        weights: Vec::with_capacity(n * m),
        follow: Vec::with_capacity(n * m),
        denom: Vec::with_capacity(n * m),
        xi: Vec::with_capacity(n * m),
        arms: Vec::with_capacity(n * m),
    };
    let mut s = vec![0.0; q];
    let mut v = vec![0.0; r];
    for i in 0..n {
        data.s_vector(i, &mut s);
        data.v_vector(i, &mut v);
        for k in 0..m {
            let theta = grid.point(k);
            let arm = decision(theta, &s)?;
            if m > 1 {
                pooled.points.extend_from_slice(theta);
            }
            pooled.points.extend_from_slice(&v);
            let follow = u8::from(dc[i] == 1 && data.a()[i] == arm);
            let denom = follow_prob(ga_pred[i], arm) * gc_pred[i];
            if !denom.is_finite() || denom <= 0.0 {
                return Err(Error::invalid(format!(
                    "nonpositive mechanism denominator {denom} at row {i}"
                )));
            }
            let xi_val = xi.map(|x| x[i * m + k]).unwrap_or(1.0);
            pooled.outcome.push(surv[i]);
            pooled
                .weights
                .push(m as f64 * grid.weight(k) * f64::from(follow) * xi_val / denom);
            pooled.follow.push(follow);
            pooled.denom.push(denom);
            pooled.xi.push(xi_val);
            pooled.arms.push(arm);
        }
    }
    Ok(pooled)
}

/// The inverse-probability-weighted negated log-likelihood of a candidate
/// surface, mixed over directions.
///
/// Returns the loss together with an [`Warning::EmptyRegimen`] marker when
/// no pseudo-row carries weight (the loss is then zero by convention).
/// Predictions are clipped to [1e-6, 1−1e-6] before the log terms.
///
/// # Errors
///
/// [`Error::InvalidInput`] when `predictions` has the wrong length or a
/// value outside the open unit interval.
pub fn ipw_loss(
    predictions: &[f64],
    pooled: &PooledDesign,
    grid: &ThetaGrid,
) -> Result<(f64, Option<Warning>)> {
    let n = pooled.n;
    let m = pooled.m;
    if predictions.len() != n * m {
        return Err(Error::invalid(format!(
            "{} predictions for {} pseudo-rows",
            predictions.len(),
            n * m
        )));
    }
    if grid.len() != m {
        return Err(Error::invalid("direction grid does not match the pooled design"));
    }
    let mut total = 0.0;
    let mut any = false;
    for k in 0..m {
        let mut dir_sum = 0.0;
        for i in 0..n {
            let p = i * m + k;
            if pooled.follow[p] == 0 {
                continue;
            }
            let pred = predictions[p];
            if !(pred > 0.0 && pred < 1.0) {
                return Err(Error::invalid(format!(
                    "prediction {pred} at pseudo-row {p} is outside (0, 1)"
                )));
            }
            any = true;
            let psi = pred.clamp(1e-6, 1.0 - 1e-6);
            let nominal = pooled.xi[p] / pooled.denom[p];
            let ell = -(pooled.outcome[p] * psi.ln()
                + (1.0 - pooled.outcome[p]) * (1.0 - psi).ln());
            dir_sum += nominal * ell;
        }
        total += grid.weight(k) * dir_sum / n as f64;
    }
    if !any {
        return Ok((
            0.0,
            Some(Warning::EmptyRegimen(
                "no uncensored rule-follower carries weight; loss defaults to zero".into(),
            )),
        ));
    }
    Ok((total, None))
}

/// A cross-fitted surface-path fit over the pooled pseudo-sample.
#[derive(Debug)]
pub struct PsiPath {
    /// The pseudo-sample the fit consumed.
    pub pooled: PooledDesign,
    /// Basis over the pooled covariates.
    pub basis: Arc<HalBasis>,
    /// Per-fold path fits and pooled out-of-fold losses.
    pub cross: CrossPath,
    /// Fold assignment expanded to pseudo-rows.
    pub folds_pooled: FoldAssignment,
}

impl PsiPath {
    /// Out-of-fold surface values at bound index `k`, in pooled layout.
    pub fn surface(&self, k: usize) -> Vec<f64> {
        self.cross.oof_predictions(k)
    }

    /// Index of the bound with the smallest cross-validated loss (ties
    /// toward the smaller bound).
    pub fn cv_best_index(&self) -> usize {
        let losses = &self.cross.cv_losses;
        let mut best = 0;
        for (k, loss) in losses.iter().enumerate() {
            if *loss < losses[best] {
                best = k;
            }
        }
        best
    }

    /// Fold fits at bound index `k`, with the basis attached.
    pub fn fold_fits(&self, k: usize) -> Vec<HalFit> {
        self.cross.fold_fits
            .iter()
            .map(|fold| fold[k].clone().with_basis(Arc::clone(&self.basis)))
            .collect()
    }
}

/// Fits the response surface along an ascending bound path.
///
/// The pooled pseudo-sample is built once; each fold's path is fitted on
/// its training complement by weight masking. `config.gamma` is unused
/// here (surface predictions are probabilities already).
///
/// # Errors
///
/// [`Error::EmptyRegimen`] when no pseudo-row (or none in some training
/// complement) carries weight; basis and solver errors propagate.
#[allow(clippy::too_many_arguments)]
pub fn fit_psi_path(
    data: &Dataset,
    t: f64,
    grid: &ThetaGrid,
    ga_pred: &[f64],
    gc_pred: &[f64],
    xi: Option<&[f64]>,
    config: &NuisanceConfig,
    bounds: &[f64],
    folds: &FoldAssignment,
) -> Result<PsiPath> {
    let pooled = pool_rows(data, t, grid, ga_pred, gc_pred, xi)?;
    if pooled.weights.iter().all(|w| *w == 0.0) {
        return Err(Error::EmptyRegimen(
            "no uncensored rule-follower carries weight; the surface fit has no data".into(),
        ));
    }
    let folds_pooled = folds.expand(pooled.m)?;
    for b in 1..=folds_pooled.n_folds() {
        if !folds_pooled
            .train_weights(&pooled.weights, b)
            .iter()
            .any(|w| *w > 0.0)
        {
            return Err(Error::EmptyRegimen(format!(
                "no weighted pseudo-row outside fold {b}; cannot cross-fit the surface"
            )));
        }
    }
    let selected: Vec<usize> = (0..pooled.dim).collect();
    let basis = Arc::new(enumerate_basis_points(
        &pooled.points,
        pooled.n * pooled.m,
        pooled.dim,
        &selected,
        config.max_order.min(pooled.dim),
        config.policy,
    )?);
    let design = basis.design(&pooled.points, pooled.n * pooled.m)?;
    let cross = fit_cross_path(
        &design,
        &pooled.outcome,
        &pooled.weights,
        Link::Logit,
        &folds_pooled,
        bounds,
        config.opts,
    )?;
    Ok(PsiPath { pooled, basis, cross, folds_pooled })
}

/// Kernel weights K_{h,v₀}(V_i) for every row.
///
/// # Errors
///
/// [`Error::InvalidInput`] when the kernel's dimension differs from the
/// dataset's stratum columns.
pub fn kernel_weights(data: &Dataset, kernel: &KernelSpec) -> Result<Vec<f64>> {
    let r = data.v_cols().len();
    if kernel.dim() != r {
        return Err(Error::invalid(format!(
            "kernel centered in dimension {}, dataset has {r} stratum columns",
            kernel.dim()
        )));
    }
    let mut v = vec![0.0; r];
    let mut out = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        data.v_vector(i, &mut v);
        out.push(kernel.weight(&v));
    }
    Ok(out)
}

/// Kernel-smooths an out-of-fold surface at the kernel's center.
///
/// Each validation fold contributes the kernel-weighted average of its
/// own rows' surface values; fold estimates are averaged and the result is
/// clipped to [0, 1]. The smoother is an affine average, so it stays
/// within the range of the surface values it touches.
///
/// # Arguments
///
/// * `surface` - out-of-fold surface values in pooled layout (n·m).
/// * `theta_idx` - which direction's slice of the surface to smooth.
///
/// # Errors
///
/// [`Error::ZeroKernelMass`] when some fold has no kernel-supported row;
/// [`Error::InvalidInput`] on layout mismatches.
pub fn estimate_curve(
    surface: &[f64],
    m: usize,
    theta_idx: usize,
    k_vals: &[f64],
    folds: &FoldAssignment,
) -> Result<f64> {
    let n = folds.n();
    if surface.len() != n * m {
        return Err(Error::invalid(format!(
            "surface has {} values, expected {} x {m}",
            surface.len(),
            n
        )));
    }
    if k_vals.len() != n {
        return Err(Error::invalid("kernel weights must cover every row"));
    }
    if theta_idx >= m {
        return Err(Error::invalid(format!("direction index {theta_idx} out of range for {m}")));
    }
    let b_total = folds.n_folds();
    let mut acc = 0.0;
    for b in 1..=b_total {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            if folds.fold_of(i) == b {
                num += k_vals[i] * surface[i * m + theta_idx];
                den += k_vals[i];
            }
        }
        if den <= 0.0 {
            return Err(Error::ZeroKernelMass { h: f64::NAN });
        }
        acc += num / den;
    }
    Ok((acc / b_total as f64).clamp(0.0, 1.0))
}

/// One row's influence-function value from explicit components, using a
/// plain (non-cross-fitted) kernel normalizer.
///
/// The three leading terms weight the survival indicator and the
/// outcome-regression augmentations; the last recenters by the plug-in
/// estimate. Rows with zero kernel weight contribute exactly zero.
#[allow(clippy::too_many_arguments)]
pub fn eif_value(
    k: f64,
    pn_k: f64,
    dc: u8,
    follow: u8,
    surv: f64,
    q_hat: f64,
    ga_follow: f64,
    gc: f64,
    psi0h: f64,
) -> f64 {
    let k_norm = k / pn_k;
    let follow = f64::from(follow);
    let dc = f64::from(dc);
    let t1 = k_norm * dc * follow * surv / (ga_follow * gc);
    let t2 = k_norm * follow * q_hat * (dc - gc) / (ga_follow * gc);
    let t3 = k_norm * q_hat * (follow - ga_follow) / ga_follow;
    t1 - t2 - t3 - k_norm * psi0h
}

/// Estimated influence-function values with their exact-centering plug-in.
#[derive(Debug, Clone)]
pub struct EifReport {
    /// Per-row influence values D*_i.
    pub values: Vec<f64>,
    /// The plug-in Ψ̂₀h: the observation-weighted average of per-fold
    /// augmented estimates, at which the empirical mean of `values`
    /// vanishes identically.
    pub plug_in: f64,
    /// Per-fold augmented estimates.
    pub fold_estimates: Vec<f64>,
    /// Per-fold mean kernel weights (the cross-fitted normalizers).
    pub fold_k_means: Vec<f64>,
}

/// Computes cross-fitted influence-function values for every row.
///
/// Fold b's rows are normalized by fold b's mean kernel weight and use the
/// cross-fitted nuisance predictions supplied per row.
///
/// # Arguments
///
/// * `k_vals` - kernel weights per row.
/// * `dc` - censoring-adjusted event indicator Δᶜ per row.
/// * `follow` - rule-following indicator I(A_i = d(S_i)) per row.
/// * `surv` - survival indicator I(Y_i > t) per row.
/// * `q_hat` - outcome-regression predictions per row.
/// * `ga_follow` - P(A = d(S_i) | W_i), truncated, per row.
/// * `gc_pred` - censoring probabilities at the observed arm, truncated.
///
/// # Errors
///
/// [`Error::ZeroKernelMass`] when some fold has no kernel-supported row;
/// [`Error::InvalidInput`] on length mismatches.
#[allow(clippy::too_many_arguments)]
pub fn eif_components(
    k_vals: &[f64],
    dc: &[u8],
    follow: &[u8],
    surv: &[f64],
    q_hat: &[f64],
    ga_follow: &[f64],
    gc_pred: &[f64],
    folds: &FoldAssignment,
) -> Result<EifReport> {
    let n = folds.n();
    if [k_vals.len(), dc.len(), follow.len(), surv.len(), q_hat.len(), ga_follow.len(),
        gc_pred.len()]
    .iter()
    .any(|&len| len != n)
    {
        return Err(Error::invalid("all influence inputs must cover every row"));
    }
    let b_total = folds.n_folds() as usize;
    let mut fold_k_means = vec![0.0; b_total];
    let mut fold_sizes = vec![0usize; b_total];
    for (i, &k) in k_vals.iter().enumerate() {
        let b = (folds.fold_of(i) - 1) as usize;
        fold_k_means[b] += k;
        fold_sizes[b] += 1;
    }
    for b in 0..b_total {
        if fold_sizes[b] == 0 {
            continue;
        }
        fold_k_means[b] /= fold_sizes[b] as f64;
        if fold_k_means[b] <= 0.0 {
            return Err(Error::ZeroKernelMass { h: f64::NAN });
        }
    }

    // Per-fold augmented estimates T_b: the kernel-normalized mean of the
    // uncentered influence terms over fold b's rows.
    let mut raw = vec![0.0; n];
    let mut fold_estimates = vec![0.0; b_total];
    for i in 0..n {
        let b = (folds.fold_of(i) - 1) as usize;
        let k_norm = k_vals[i] / fold_k_means[b];
        let f = f64::from(follow[i]);
        let d = f64::from(dc[i]);
        let t1 = k_norm * d * f * surv[i] / (ga_follow[i] * gc_pred[i]);
        let t2 = k_norm * f * q_hat[i] * (d - gc_pred[i]) / (ga_follow[i] * gc_pred[i]);
        let t3 = k_norm * q_hat[i] * (f - ga_follow[i]) / ga_follow[i];
        raw[i] = t1 - t2 - t3;
        fold_estimates[b] += raw[i] / fold_sizes[b] as f64;
    }
    // Observation-weighted fold average: with it, Σ_i D*_i = 0 exactly
    // whatever the fold sizes.
    let mut plug_in = 0.0;
    for b in 0..b_total {
        plug_in += fold_sizes[b] as f64 / n as f64 * fold_estimates[b];
    }
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let b = (folds.fold_of(i) - 1) as usize;
            raw[i] - k_vals[i] / fold_k_means[b] * plug_in
        })
        .collect();
    Ok(EifReport { values, plug_in, fold_estimates, fold_k_means })
}

/// Influence-function variance: σ̂² = hʳ · P_n(D*²).
pub fn variance_eif(report: &EifReport, h: f64, r: usize) -> f64 {
    let n = report.values.len() as f64;
    let second_moment = report.values.iter().map(|d| d * d).sum::<f64>() / n;
    h.powi(r as i32) * second_moment
}

/// Conservative variance: σ̂² = hʳ · P_n[{K/K̄_b · (Ψ_n − ψ̂)}²], with the
/// plug-in estimate standing in for the true curve value.
///
/// # Errors
///
/// [`Error::ZeroKernelMass`] when some fold has no kernel-supported row;
/// [`Error::InvalidInput`] on length mismatches.
pub fn variance_conservative(
    k_vals: &[f64],
    surface_theta: &[f64],
    psi_hat: f64,
    folds: &FoldAssignment,
    h: f64,
    r: usize,
) -> Result<f64> {
    let n = folds.n();
    if k_vals.len() != n || surface_theta.len() != n {
        return Err(Error::invalid("kernel weights and surface must cover every row"));
    }
    let b_total = folds.n_folds() as usize;
    let mut fold_k_means = vec![0.0; b_total];
    let mut fold_sizes = vec![0usize; b_total];
    for (i, &k) in k_vals.iter().enumerate() {
        let b = (folds.fold_of(i) - 1) as usize;
        fold_k_means[b] += k;
        fold_sizes[b] += 1;
    }
    for b in 0..b_total {
        if fold_sizes[b] > 0 {
            fold_k_means[b] /= fold_sizes[b] as f64;
            if fold_k_means[b] <= 0.0 {
                return Err(Error::ZeroKernelMass { h });
            }
        }
    }
    let mut second_moment = 0.0;
    for i in 0..n {
        let b = (folds.fold_of(i) - 1) as usize;
        let c = k_vals[i] / fold_k_means[b] * (surface_theta[i] - psi_hat);
        second_moment += c * c;
    }
    Ok(h.powi(r as i32) * second_moment / n as f64)
}

/// Wald-type confidence interval ψ̂ ∓ z_{1−α/2}·σ̂/√(n·hʳ), clipped to
/// [0, 1].
///
/// # Errors
///
/// [`Error::InvalidInput`] when σ̂ is negative, α is outside (0, 1), or
/// n·hʳ is nonpositive.
pub fn confidence_interval(
    psi_hat: f64,
    sigma_hat: f64,
    n: usize,
    h: f64,
    r: usize,
    alpha: f64,
) -> Result<(f64, f64)> {
    if sigma_hat < 0.0 || !sigma_hat.is_finite() {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {sigma_hat}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let scale = (n as f64 * h.powi(r as i32)).sqrt();
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::invalid("n·h^r must be positive"));
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    let half = z * sigma_hat / scale;
    Ok(((psi_hat - half).max(0.0), (psi_hat + half).min(1.0)))
}

/// Kernel-weighted effective sample size (ΣK)² / ΣK².
pub fn effective_sample_size(k_vals: &[f64]) -> f64 {
    let sum: f64 = k_vals.iter().sum();
    let sum_sq: f64 = k_vals.iter().map(|k| k * k).sum();
    if sum_sq == 0.0 {
        0.0
    } else {
        sum * sum / sum_sq
    }
}

/// One curve evaluation with inference and tuning provenance.
#[derive(Debug, Clone)]
pub struct CurveEstimate {
    /// The smoothed curve estimate, in [0, 1].
    pub psi_hat: f64,
    /// Standardized standard error (the √(n·hʳ)-scale sigma).
    pub sigma_hat: f64,
    /// Lower confidence limit.
    pub ci_lower: f64,
    /// Upper confidence limit.
    pub ci_upper: f64,
    /// Bandwidth the estimate used.
    pub h_used: f64,
    /// L1 bound behind the surface fit.
    pub lambda_psi: f64,
    /// L1 bound behind the treatment-mechanism fit.
    pub lambda_ga: f64,
    /// L1 bound behind the censoring-mechanism fit.
    pub lambda_gc: f64,
    /// Kernel-weighted effective sample size.
    pub n_eff: f64,
}
