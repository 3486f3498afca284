//! Bound-selection criteria that deliberately undersmooth the constrained
//! fits feeding the curve estimator.
//!
//! Cross-validation picks the L1 bound that predicts best, but plug-in
//! inference wants *larger* bounds: richer fits drive the empirical mean
//! of certain orthogonal score terms — functions of the kernel weight, the
//! mechanism fits, the outcome regression, and the surface — toward zero,
//! which is exactly what removes the first-order bias of the smoothed
//! estimate. This module computes those score terms, selects bounds along
//! an ascending grid by driving them to zero (or under an explicit
//! threshold), and exposes score-based diagnostics for judging how far a
//! fit is from solving its own score equations.
//!
//! All aggregates are cross-fitted: each validation fold is normalized by
//! its own mean kernel weight, and fold means are averaged.

use crate::error::{Error, Result, Warning};
use crate::hal::{HalFit, Link};
use crate::nuisance::FoldAssignment;
use crate::ColMatrix;

/// Row-level ingredients shared by the three score terms.
///
/// All slices cover the observation rows (not pseudo-rows); `gc_rule` is
/// the censoring probability at the *rule's* arm, which coincides with the
/// observed-arm prediction on rows that follow the rule.
#[derive(Debug, Clone, Copy)]
pub struct DcarContext<'a> {
    /// Kernel weights K_{h,v₀}(V_i).
    pub k_vals: &'a [f64],
    /// Censoring-adjusted event indicator Δᶜ.
    pub dc: &'a [u8],
    /// Rule-following indicator I(A_i = d(S_i)).
    pub follow: &'a [u8],
    /// Survival indicator I(Y_i > t).
    pub surv: &'a [f64],
    /// P(A = d(S_i) | W_i), truncated.
    pub ga_follow: &'a [f64],
    /// Censoring probability at the rule's arm, truncated.
    pub gc_rule: &'a [f64],
    /// Fold assignment over rows.
    pub folds: &'a FoldAssignment,
}

impl<'a> DcarContext<'a> {
    fn validate(&self) -> Result<usize> {
        let n = self.folds.n();
        if [
            self.k_vals.len(),
            self.dc.len(),
            self.follow.len(),
            self.surv.len(),
            self.ga_follow.len(),
            self.gc_rule.len(),
        ]
        .iter()
        .any(|&len| len != n)
        {
            return Err(Error::invalid("score-term inputs must cover every row"));
        }
        Ok(n)
    }
}

/// A cross-fitted score aggregate with its per-fold components.
#[derive(Debug, Clone)]
pub struct DcarValue {
    /// The fold-averaged aggregate.
    pub value: f64,
    /// Per-fold kernel-normalized means (averaging them reproduces
    /// `value`).
    pub per_fold: Vec<f64>,
}

/// Shared aggregation: fold b contributes P¹_b[K·term] / P¹_b[K], and the
/// aggregate is the simple average of fold contributions.
fn aggregate<F>(ctx: &DcarContext, term: F) -> Result<DcarValue>
where
    F: Fn(usize) -> f64,
{
    let n = ctx.validate()?;
    let b_total = ctx.folds.n_folds() as usize;
    let mut num = vec![0.0; b_total];
    let mut k_sum = vec![0.0; b_total];
    for i in 0..n {
        let b = (ctx.folds.fold_of(i) - 1) as usize;
        num[b] += ctx.k_vals[i] * term(i);
        k_sum[b] += ctx.k_vals[i];
    }
    let mut per_fold = Vec::with_capacity(b_total);
    for b in 0..b_total {
        if k_sum[b] <= 0.0 {
            return Err(Error::ZeroKernelMass { h: f64::NAN });
        }
        per_fold.push(num[b] / k_sum[b]);
    }
    let value = per_fold.iter().sum::<f64>() / b_total as f64;
    Ok(DcarValue { value, per_fold })
}

/// Treatment-mechanism score: the kernel-normalized mean of
/// (Q̂ − Ψ̂)·(ĝᵃ − I(A=d)) / Ĝ, where Ĝ = ĝᵃ·ĝᶜ at the rule's arm.
///
/// Vanishes identically when Q̂ ≡ Ψ̂ or when ĝᵃ reproduces the follow
/// indicator row-wise.
///
/// # Errors
///
/// [`Error::InvalidInput`] on length mismatches; [`Error::ZeroKernelMass`]
/// when a fold has no kernel-supported row.
pub fn dcar_a(ctx: &DcarContext, q_hat: &[f64], psi_surface: &[f64]) -> Result<DcarValue> {
    let n = ctx.validate()?;
    if q_hat.len() != n || psi_surface.len() != n {
        return Err(Error::invalid("Q and surface values must cover every row"));
    }
    aggregate(ctx, |i| {
        let mismatch = ctx.ga_follow[i] - f64::from(ctx.follow[i]);
        if mismatch == 0.0 {
            return 0.0;
        }
        (q_hat[i] - psi_surface[i]) * mismatch / (ctx.ga_follow[i] * ctx.gc_rule[i])
    })
}

/// Censoring-mechanism score: the kernel-normalized mean of
/// (Q̂ − Ψ̂)·I(A=d)·(ĝᶜ − Δᶜ) / Ĝ.
///
/// Vanishes identically when Q̂ ≡ Ψ̂ or when ĝᶜ reproduces Δᶜ row-wise.
///
/// # Errors
///
/// As [`dcar_a`].
pub fn dcar_c(ctx: &DcarContext, q_hat: &[f64], psi_surface: &[f64]) -> Result<DcarValue> {
    let n = ctx.validate()?;
    if q_hat.len() != n || psi_surface.len() != n {
        return Err(Error::invalid("Q and surface values must cover every row"));
    }
    aggregate(ctx, |i| {
        if ctx.follow[i] == 0 {
            return 0.0;
        }
        let mismatch = ctx.gc_rule[i] - f64::from(ctx.dc[i]);
        if mismatch == 0.0 {
            return 0.0;
        }
        (q_hat[i] - psi_surface[i]) * mismatch / (ctx.ga_follow[i] * ctx.gc_rule[i])
    })
}

/// Surface score: the kernel-normalized mean of
/// Δᶜ·I(A=d)·(Ψ̂ − I(Y>t)) / Ĝ — the fitted surface's own weighted
/// residual equation at the evaluation point.
///
/// # Errors
///
/// As [`dcar_a`].
pub fn dcar_psi(ctx: &DcarContext, psi_surface: &[f64]) -> Result<DcarValue> {
    let n = ctx.validate()?;
    if psi_surface.len() != n {
        return Err(Error::invalid("surface values must cover every row"));
    }
    aggregate(ctx, |i| {
        if ctx.dc[i] == 0 || ctx.follow[i] == 0 {
            return 0.0;
        }
        (psi_surface[i] - ctx.surv[i]) / (ctx.ga_follow[i] * ctx.gc_rule[i])
    })
}

/// A geometric grid of `points` bounds from `lambda_cv` to
/// `factor·lambda_cv`, ascending.
///
/// # Errors
///
/// [`Error::InvalidInput`] when `lambda_cv` is nonpositive, `factor` ≤ 1,
/// or fewer than two points are requested.
pub fn lambda_grid(lambda_cv: f64, factor: f64, points: usize) -> Result<Vec<f64>> {
    if !lambda_cv.is_finite() || lambda_cv <= 0.0 {
        return Err(Error::invalid(format!("lambda_cv must be positive, got {lambda_cv}")));
    }
    if !factor.is_finite() || factor <= 1.0 || points < 2 {
        return Err(Error::invalid("need factor > 1 and at least two grid points"));
    }
    let step = factor.powf(1.0 / (points - 1) as f64);
    let mut grid = Vec::with_capacity(points);
    let mut lam = lambda_cv;
    for _ in 0..points {
        grid.push(lam);
        lam *= step;
    }
    // Guard the endpoint against accumulated rounding.
    grid[points - 1] = lambda_cv * factor;
    Ok(grid)
}

/// One selected bound with its criterion value.
#[derive(Debug, Clone, Copy)]
pub struct LambdaChoice {
    /// Index into the candidate grid.
    pub index: usize,
    /// The selected bound.
    pub lambda: f64,
    /// |score| at the selection.
    pub criterion: f64,
}

/// Validates an ascending (λ, score) sequence.
fn validate_grid(scores: &[(f64, f64)]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::invalid("candidate grid must be nonempty"));
    }
    if scores.windows(2).any(|p| p[1].0 <= p[0].0) {
        return Err(Error::invalid("candidate bounds must be strictly ascending"));
    }
    if scores.iter().any(|(l, s)| !l.is_finite() || !s.is_finite()) {
        return Err(Error::invalid("bounds and scores must be finite"));
    }
    Ok(())
}

/// The bound minimizing the absolute score (ties toward the smaller
/// bound).
fn select_min_abs(scores: &[(f64, f64)]) -> Result<LambdaChoice> {
    validate_grid(scores)?;
    let mut best = 0;
    for (k, (_, s)) in scores.iter().enumerate() {
        if s.abs() < scores[best].1.abs() {
            best = k;
        }
    }
    Ok(LambdaChoice { index: best, lambda: scores[best].0, criterion: scores[best].1.abs() })
}

/// Selects the treatment-mechanism bound: the grid λ minimizing the
/// absolute aggregated treatment score.
///
/// `scores` pairs each candidate bound (ascending, starting at the
/// cross-validated bound) with its aggregated [`dcar_a`] value.
///
/// # Errors
///
/// [`Error::InvalidInput`] on an empty, unsorted, or non-finite grid.
pub fn select_lambda_ga(scores: &[(f64, f64)]) -> Result<LambdaChoice> {
    select_min_abs(scores)
}

/// Selects the censoring-mechanism bound; mirrors [`select_lambda_ga`]
/// with the [`dcar_c`] aggregate.
///
/// # Errors
///
/// As [`select_lambda_ga`].
pub fn select_lambda_gc(scores: &[(f64, f64)]) -> Result<LambdaChoice> {
    select_min_abs(scores)
}

/// Selects the surface bound: the smallest grid λ whose absolute
/// aggregated surface score falls below σ̂ / √(n·log n). When none
/// qualifies, the largest λ is returned with a
/// [`Warning::ThresholdNotMet`].
///
/// # Errors
///
/// [`Error::InvalidInput`] when σ̂ is nonpositive or the grid is invalid.
pub fn select_lambda_psi(
    scores: &[(f64, f64)],
    sigma_nh: f64,
    n: usize,
) -> Result<(LambdaChoice, Option<Warning>)> {
    validate_grid(scores)?;
    if !sigma_nh.is_finite() || sigma_nh <= 0.0 {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma_nh}")));
    }
    if n < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    let threshold = sigma_nh / (n as f64 * (n as f64).ln()).sqrt();
    for (k, (lam, s)) in scores.iter().enumerate() {
        if s.abs() <= threshold {
            return Ok((LambdaChoice { index: k, lambda: *lam, criterion: s.abs() }, None));
        }
    }
    let last = scores.len() - 1;
    let achieved = scores.iter().map(|(_, s)| s.abs()).fold(f64::INFINITY, f64::min);
    Ok((
        LambdaChoice {
            index: last,
            lambda: scores[last].0,
            criterion: scores[last].1.abs(),
        },
        Some(Warning::ThresholdNotMet { target: threshold, achieved }),
    ))
}

/// Collapses per-point score grids into a single sup-magnitude grid: entry
/// k pairs the common λ_k with sup over evaluation points of |score|.
///
/// Feeding the result into a selector yields the uniform-over-points
/// variant of that selector.
///
/// # Errors
///
/// [`Error::InvalidInput`] when the collection is empty or the per-point
/// grids disagree on the bounds.
pub fn sup_abs_scores(per_point: &[Vec<(f64, f64)>]) -> Result<Vec<(f64, f64)>> {
    if per_point.is_empty() {
        return Err(Error::invalid("need at least one evaluation point"));
    }
    validate_grid(&per_point[0])?;
    let bounds: Vec<f64> = per_point[0].iter().map(|(l, _)| *l).collect();
    for grid in per_point.iter().skip(1) {
        validate_grid(grid)?;
        if grid.len() != bounds.len()
            || grid.iter().zip(&bounds).any(|((l, _), b)| (l - b).abs() > 1e-12)
        {
            return Err(Error::invalid("per-point grids must share one bound sequence"));
        }
    }
    Ok(bounds
        .iter()
        .enumerate()
        .map(|(k, &lam)| {
            let sup = per_point.iter().map(|g| g[k].1.abs()).fold(0.0, f64::max);
            (lam, sup)
        })
        .collect())
}

/// Uniform-over-points mechanism selection: the bound minimizing the
/// supremum (over evaluation points) of the absolute aggregated score.
///
/// The threshold-style surface variant composes [`sup_abs_scores`] with
/// [`select_lambda_psi`] instead.
///
/// # Errors
///
/// As [`sup_abs_scores`] and [`select_lambda_ga`].
pub fn select_uniform(per_point: &[Vec<(f64, f64)>]) -> Result<LambdaChoice> {
    select_min_abs(&sup_abs_scores(per_point)?)
}

/// Componentwise empirical deciles of the stratum covariates, as a default
/// evaluation grid for uniform selection: point j pairs each coordinate's
/// j-th decile.
pub fn stratum_deciles(data: &crate::Dataset) -> Vec<Vec<f64>> {
    let r = data.v_cols().len();
    let n = data.n();
    let mut per_coord: Vec<Vec<f64>> = Vec::with_capacity(r);
    for (c, _) in data.v_cols().iter().enumerate() {
        let mut vals: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; r];
                data.v_vector(i, &mut v);
                v[c]
            })
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        per_coord.push(vals);
    }
    (1..=10)
        .map(|d| {
            (0..r)
                .map(|c| {
                    let idx = ((d * (n - 1)) as f64 / 10.0).round() as usize;
                    per_coord[c][idx.min(n - 1)]
                })
                .collect()
        })
        .collect()
}

/// Cross-fitted score-equation criterion for a mechanism fit: the average
/// over folds of Σ_{j active} |P¹_b φ_j·(A − ĝ)/ĝ| / ‖β_b‖₁.
///
/// Smaller values mean the fit comes closer to solving the score equation
/// of every active basis function, the hallmark of sufficient
/// undersmoothing.
///
/// # Arguments
///
/// * `fits` - fold fits (fold b's model at index b−1).
/// * `design` - full-sample basis design the fits were trained on.
/// * `outcome` - the regressed indicator (e.g. the arm) as reals.
/// * `predictions` - cross-fitted predictions per row.
///
/// # Errors
///
/// [`Error::InvalidInput`] on shape mismatches or a fit with zero
/// coefficient norm.
pub fn score_criterion(
    fits: &[HalFit],
    design: &ColMatrix,
    outcome: &[f64],
    predictions: &[f64],
    folds: &FoldAssignment,
) -> Result<f64> {
    let n = folds.n();
    if design.rows() != n || outcome.len() != n || predictions.len() != n {
        return Err(Error::invalid("design, outcome, and predictions must cover every row"));
    }
    if fits.len() != folds.n_folds() as usize {
        return Err(Error::invalid(format!(
            "{} fits for {} folds",
            fits.len(),
            folds.n_folds()
        )));
    }
    let mut total = 0.0;
    for (b_idx, fit) in fits.iter().enumerate() {
        if fit.l1_norm <= 0.0 {
            return Err(Error::invalid(
                "fit has zero coefficient norm; the criterion is undefined",
            ));
        }
        let rows = folds.rows_in(b_idx as u32 + 1);
        if rows.is_empty() {
            continue;
        }
        let mut fold_sum = 0.0;
        for (j, &beta) in fit.coefficients.iter().enumerate() {
            if beta == 0.0 {
                continue;
            }
            let col = design.col(j);
            let mut mean = 0.0;
            for &i in &rows {
                mean += col[i] * (outcome[i] - predictions[i]) / predictions[i];
            }
            fold_sum += (mean / rows.len() as f64).abs();
        }
        total += fold_sum / fit.l1_norm;
    }
    Ok(total / fits.len() as f64)
}

/// Minimum absolute empirical score over a fit's active basis functions
/// (the implicit intercept included), measuring how completely the fit
/// solves its own score equations.
///
/// The score of column j is (1/n) Σ w·φ_j·(μ(η) − y) with μ the link's
/// mean function; the intercept's column is identically one.
///
/// # Errors
///
/// [`Error::InvalidInput`] on shape mismatches.
pub fn min_score_diagnostic(
    fit: &HalFit,
    design: &ColMatrix,
    y: &[f64],
    w: &[f64],
) -> Result<f64> {
    let n = design.rows();
    if y.len() != n || w.len() != n || fit.coefficients.len() != design.cols() {
        return Err(Error::invalid("design, outcome, weights, and fit must align"));
    }
    let eta = fit.linear_predictor_design(design);
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let mu = match fit.link {
                Link::Identity => eta[i],
                Link::Logit => crate::num::expit(eta[i]),
            };
            w[i] * (mu - y[i])
        })
        .collect();
    let inv_n = 1.0 / n as f64;
    // The intercept behaves as an always-active constant basis function.
    let mut min_abs = (resid.iter().sum::<f64>() * inv_n).abs();
    for (j, &beta) in fit.coefficients.iter().enumerate() {
        if beta == 0.0 {
            continue;
        }
        let mut score = 0.0;
        for (r, x) in resid.iter().zip(design.col(j)) {
            score += r * x;
        }
        min_abs = min_abs.min((score * inv_n).abs());
    }
    Ok(min_abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hal::{fit_constrained, FitOptions};
    use crate::nuisance::make_folds;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Random score-term inputs over `n` rows.
    struct Inputs {
        k_vals: Vec<f64>,
        dc: Vec<u8>,
        follow: Vec<u8>,
        surv: Vec<f64>,
        ga: Vec<f64>,
        gc: Vec<f64>,
        q: Vec<f64>,
        psi: Vec<f64>,
        folds: FoldAssignment,
    }

    fn random_inputs(n: usize, b: u32, seed: u64) -> Inputs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Inputs {
            k_vals: (0..n)
                .map(|_| if rng.random::<f64>() < 0.25 { 0.0 } else { rng.random_range(0.05..2.0) })
                .collect(),
            dc: (0..n).map(|_| u8::from(rng.random::<f64>() < 0.8)).collect(),
            follow: (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect(),
            surv: (0..n).map(|_| f64::from(rng.random::<f64>() < 0.6)).collect(),
            ga: (0..n).map(|_| rng.random_range(0.15..0.85)).collect(),
            gc: (0..n).map(|_| rng.random_range(0.4..0.95)).collect(),
            q: (0..n).map(|_| rng.random_range(0.1..0.9)).collect(),
            psi: (0..n).map(|_| rng.random_range(0.1..0.9)).collect(),
            folds: make_folds(n, b, seed).unwrap(),
        }
    }

    impl Inputs {
        fn ctx(&self) -> DcarContext<'_> {
            DcarContext {
                k_vals: &self.k_vals,
                dc: &self.dc,
                follow: &self.follow,
                surv: &self.surv,
                ga_follow: &self.ga,
                gc_rule: &self.gc,
                folds: &self.folds,
            }
        }
    }

    /// Literal per-fold re-computation of all three aggregates, written
    /// with explicit row lists and textbook formulas.
    fn naive_all(inp: &Inputs) -> (f64, f64, f64) {
        let b_total = inp.folds.n_folds();
        let (mut a_total, mut c_total, mut p_total) = (0.0, 0.0, 0.0);
        for b in 1..=b_total {
            let rows = inp.folds.rows_in(b);
            let k_mean: f64 =
                rows.iter().map(|&i| inp.k_vals[i]).sum::<f64>() / rows.len() as f64;
            let (mut a_sum, mut c_sum, mut p_sum) = (0.0, 0.0, 0.0);
            for &i in &rows {
                let g_joint = inp.ga[i] * inp.gc[i];
                let ind = f64::from(inp.follow[i]);
                let dci = f64::from(inp.dc[i]);
                a_sum += inp.k_vals[i] / k_mean * (inp.q[i] - inp.psi[i]) * (inp.ga[i] - ind)
                    / g_joint;
                c_sum += inp.k_vals[i] / k_mean
                    * (inp.q[i] - inp.psi[i])
                    * ind
                    * (inp.gc[i] - dci)
                    / g_joint;
                p_sum +=
                    inp.k_vals[i] / k_mean * dci * ind * (inp.psi[i] - inp.surv[i]) / g_joint;
            }
            a_total += a_sum / rows.len() as f64;
            c_total += c_sum / rows.len() as f64;
            p_total += p_sum / rows.len() as f64;
        }
        let b = b_total as f64;
        (a_total / b, c_total / b, p_total / b)
    }

    #[test]
    fn score_terms_match_a_naive_reimplementation() {
        for seed in 0..12u64 {
            let n = 50 + (seed as usize * 13) % 150;
            let b = 1 + (seed % 4) as u32;
            let inp = random_inputs(n, b, seed);
            let ctx = inp.ctx();
            let (na, nc, np) = naive_all(&inp);
            let a = dcar_a(&ctx, &inp.q, &inp.psi).unwrap();
            let c = dcar_c(&ctx, &inp.q, &inp.psi).unwrap();
            let p = dcar_psi(&ctx, &inp.psi).unwrap();
            assert_abs_diff_eq!(a.value, na, epsilon = 1e-12);
            assert_abs_diff_eq!(c.value, nc, epsilon = 1e-12);
            assert_abs_diff_eq!(p.value, np, epsilon = 1e-12);
            // Per-fold components reproduce the aggregates.
            let back = a.per_fold.iter().sum::<f64>() / a.per_fold.len() as f64;
            assert_abs_diff_eq!(a.value, back, epsilon = 1e-12);
        }
    }

    #[test]
    fn matching_regressions_zero_the_mechanism_scores() {
        let mut inp = random_inputs(80, 3, 5);
        inp.psi = inp.q.clone();
        let ctx = inp.ctx();
        let a = dcar_a(&ctx, &inp.q, &inp.psi).unwrap();
        let c = dcar_c(&ctx, &inp.q, &inp.psi).unwrap();
        assert_abs_diff_eq!(a.value, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(c.value, 0.0, epsilon = 0.0);
    }

    #[test]
    fn oracle_indicators_zero_their_scores() {
        let mut inp = random_inputs(60, 2, 6);
        inp.ga = inp.follow.iter().map(|&f| f64::from(f)).collect();
        let a = dcar_a(&inp.ctx(), &inp.q, &inp.psi).unwrap();
        assert_abs_diff_eq!(a.value, 0.0, epsilon = 0.0);

        let mut inp2 = random_inputs(60, 2, 7);
        // Match ĝᶜ to Δᶜ exactly where the follow prefactor is live; the
        // zero-mismatch short-circuit keeps the Δᶜ = 0 rows finite.
        for i in 0..60 {
            if inp2.follow[i] == 1 {
                inp2.gc[i] = f64::from(inp2.dc[i]);
            }
        }
        let c = dcar_c(&inp2.ctx(), &inp2.q, &inp2.psi).unwrap();
        assert_abs_diff_eq!(c.value, 0.0, epsilon = 0.0);
    }

    #[test]
    fn saturated_surface_zeros_the_surface_score() {
        // Set the surface to each fold's weighted mean of the survival
        // indicator, the exact solution of the fold's score equation.
        let mut inp = random_inputs(90, 3, 8);
        for b in 1..=3u32 {
            let rows = inp.folds.rows_in(b);
            let (mut num, mut den) = (0.0, 0.0);
            for &i in &rows {
                let w = inp.k_vals[i] * f64::from(inp.dc[i]) * f64::from(inp.follow[i])
                    / (inp.ga[i] * inp.gc[i]);
                num += w * inp.surv[i];
                den += w;
            }
            let mean = num / den;
            for &i in &rows {
                inp.psi[i] = mean;
            }
        }
        let p = dcar_psi(&inp.ctx(), &inp.psi).unwrap();
        assert_abs_diff_eq!(p.value, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn no_followers_gives_a_zero_surface_score() {
        let mut inp = random_inputs(40, 2, 9);
        inp.follow.iter_mut().for_each(|f| *f = 0);
        let p = dcar_psi(&inp.ctx(), &inp.psi).unwrap();
        assert_abs_diff_eq!(p.value, 0.0, epsilon = 0.0);
    }

    #[test]
    fn geometric_grid_spans_cv_to_ten_cv() {
        let grid = lambda_grid(0.4, 10.0, 20).unwrap();
        assert_eq!(grid.len(), 20);
        assert_abs_diff_eq!(grid[0], 0.4, epsilon = 0.0);
        assert_abs_diff_eq!(grid[19], 4.0, epsilon = 1e-12);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
            // Constant ratio.
            assert_abs_diff_eq!(w[1] / w[0], 10.0_f64.powf(1.0 / 19.0), epsilon = 1e-9);
        }
        assert!(lambda_grid(0.0, 10.0, 20).is_err());
        assert!(lambda_grid(1.0, 1.0, 20).is_err());
    }

    #[test]
    fn mechanism_selector_takes_the_smallest_absolute_score() {
        let scores = vec![(0.5, 0.08), (1.0, -0.02), (2.0, 0.05)];
        let choice = select_lambda_ga(&scores).unwrap();
        assert_eq!(choice.index, 1);
        assert_abs_diff_eq!(choice.lambda, 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(choice.criterion, 0.02, epsilon = 1e-15);
        // Argmin property: no other grid point does better.
        for (_, s) in &scores {
            assert!(choice.criterion <= s.abs());
        }
        // Ties break toward the smaller bound.
        let tied = vec![(0.5, 0.03), (1.0, -0.03)];
        assert_eq!(select_lambda_gc(&tied).unwrap().index, 0);
        // Single point grids select that point.
        assert_eq!(select_lambda_ga(&[(0.7, 0.4)]).unwrap().index, 0);
        assert!(select_lambda_ga(&[]).is_err());
    }

    #[test]
    fn surface_selector_takes_the_first_crossing() {
        // Monotone decreasing magnitudes: the unique crossing is selected.
        let scores = vec![(0.5, 0.5), (1.0, 0.2), (2.0, 0.05), (4.0, 0.01)];
        let sigma = 1.0;
        let n = 500;
        let threshold = sigma / (500.0_f64 * 500.0_f64.ln()).sqrt();
        let (choice, warn) = select_lambda_psi(&scores, sigma, n).unwrap();
        assert!(warn.is_none());
        let expect = scores.iter().position(|(_, s)| s.abs() <= threshold).unwrap();
        assert_eq!(choice.index, expect);

        // A huge sigma qualifies the very first bound.
        let (first, warn) = select_lambda_psi(&scores, 1e6, n).unwrap();
        assert!(warn.is_none());
        assert_eq!(first.index, 0);

        // Nothing qualifies: largest bound plus a warning.
        let stubborn = vec![(0.5, 0.5), (1.0, 0.4)];
        let (fallback, warn) = select_lambda_psi(&stubborn, 1e-6, n).unwrap();
        assert_eq!(fallback.index, 1);
        assert!(matches!(warn, Some(Warning::ThresholdNotMet { .. })));

        assert!(select_lambda_psi(&scores, 0.0, n).is_err());
    }

    #[test]
    fn sup_grid_dominates_every_pointwise_grid() {
        let p1 = vec![(0.5, 0.1), (1.0, -0.3)];
        let p2 = vec![(0.5, -0.2), (1.0, 0.25)];
        let sup = sup_abs_scores(&[p1.clone(), p2.clone()]).unwrap();
        assert_abs_diff_eq!(sup[0].1, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sup[1].1, 0.3, epsilon = 1e-15);
        for k in 0..2 {
            assert!(sup[k].1 >= p1[k].1.abs());
            assert!(sup[k].1 >= p2[k].1.abs());
        }
        // The uniform selector takes the smallest sup.
        let uni = select_uniform(&[p1.clone(), p2.clone()]).unwrap();
        assert_eq!(uni.index, 0);
        assert_abs_diff_eq!(uni.criterion, 0.2, epsilon = 1e-15);
        // One point: sup equals the pointwise magnitudes.
        let single = sup_abs_scores(std::slice::from_ref(&p1)).unwrap();
        for k in 0..2 {
            assert_abs_diff_eq!(single[k].1, p1[k].1.abs(), epsilon = 0.0);
        }
        // Mismatched bounds are rejected.
        let other = vec![(0.4, 0.1), (1.0, 0.1)];
        assert!(sup_abs_scores(&[p1, other]).is_err());
    }

    #[test]
    fn deciles_are_sorted_sample_values() {
        let n = 55;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Vec::with_capacity(2 * n);
        for _ in 0..n {
            x.push(rng.random_range(-1.0..1.0));
            x.push(rng.random_range(-2.0..2.0));
        }
        let data = crate::Dataset::new(
            vec![1.0; n],
            vec![1; n],
            {
                let mut a = vec![0u8; n];
                a[0] = 1;
                a
            },
            x,
            vec!["s".into(), "v".into()],
            vec![0],
            vec![1],
        )
        .unwrap();
        let points = stratum_deciles(&data);
        assert_eq!(points.len(), 10);
        for w in points.windows(2) {
            assert!(w[1][0] >= w[0][0]);
        }
    }

    #[test]
    fn perfect_predictions_zero_the_score_criterion() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let col: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let design = ColMatrix::from_columns(n, 1, col);
        // Outcome equal to the (interior) predictions: residuals vanish.
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..0.8)).collect();
        let folds = make_folds(n, 2, 1).unwrap();
        let fit =
            fit_constrained(&design, &y, &vec![1.0; n], Link::Logit, 0.8, FitOptions::default())
                .unwrap();
        let criterion =
            score_criterion(&[fit.clone(), fit], &design, &y, &y.clone(), &folds).unwrap();
        assert_abs_diff_eq!(criterion, 0.0, epsilon = 0.0);
    }

    #[test]
    fn single_basis_criterion_matches_a_hand_computation() {
        let n = 6;
        let design = ColMatrix::from_columns(n, 1, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let a = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let ghat = [0.8, 0.4, 0.6, 0.5, 0.3, 0.9];
        let folds = make_folds(n, 1, 0).unwrap();
        let mut fit = fit_constrained(
            &design,
            &a,
            &vec![1.0; n],
            Link::Logit,
            0.6,
            FitOptions::default(),
        )
        .unwrap();
        // Force a known coefficient vector for the hand computation.
        fit.intercept = 0.1;
        fit.coefficients = vec![0.5];
        fit.l1_norm = 0.6;
        let mut expected = 0.0;
        for i in 0..n {
            expected += design.get(i, 0) * (a[i] - ghat[i]) / ghat[i];
        }
        expected = (expected / n as f64).abs() / 0.6;
        let got = score_criterion(&[fit], &design, &a, &ghat, &folds).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn zero_norm_fit_is_rejected_by_the_criterion() {
        let design = ColMatrix::from_columns(2, 1, vec![0.5, -0.5]);
        let y = [1.0, 0.0];
        let folds = make_folds(2, 1, 0).unwrap();
        let fit = fit_constrained(
            &design,
            &y,
            &[1.0; 2],
            Link::Logit,
            0.0,
            FitOptions::default(),
        )
        .unwrap();
        assert!(score_criterion(&[fit], &design, &y, &[0.5, 0.5], &folds).is_err());
    }

    #[test]
    fn intercept_only_fit_scores_its_centered_residual() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let col: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let design = ColMatrix::from_columns(n, 1, col);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let w = vec![1.0; n];
        // A generous bound lets the intercept match the mean exactly under
        // the identity link, so the intercept score is ~0.
        let fit =
            fit_constrained(&design, &y, &w, Link::Identity, 5.0, FitOptions::default()).unwrap();
        let diag = min_score_diagnostic(&fit, &design, &y, &w).unwrap();
        assert!(diag < 1e-7, "diagnostic {diag} should be near zero at an interior optimum");
    }
}
