//! End-to-end estimation for a single treatment rule.
//!
//! The orchestration here turns a dataset, a horizon, a stratum point v₀,
//! and a rule direction θ into kernel-smoothed curve estimates with
//! confidence intervals:
//!
//! 1. cross-fit the treatment and censoring mechanisms along a
//!    cross-validation bound ladder;
//! 2. (undersmoothed mode) extend each mechanism's ladder geometrically
//!    past its CV choice and pick the bound whose orthogonal score term is
//!    smallest in magnitude, using preliminary CV fits of the outcome
//!    regression and the surface as the score's regression inputs;
//! 3. refit the outcome regression and the surface path on the selected
//!    mechanisms;
//! 4. per candidate bandwidth, pick the surface bound (smallest bound
//!    whose surface score clears a noise threshold, in undersmoothed
//!    mode), smooth the surface into Ψ̂(v₀, θ), and attach
//!    influence-function inference;
//! 5. resolve the bandwidth either as given or by the trend rule over the
//!    candidate ladder.
//!
//! Policy search ([`optimize_policy`]) reuses one pooled surface fit
//! across every candidate direction and compares smoothed values; by
//! design it stays on cross-validated bounds, since per-direction
//! undersmoothing would refit mechanisms for every candidate at
//! prohibitive cost and the search only needs a stable ranking.

use crate::bandwidth::{candidate_grid, select_bandwidth, BandwidthChoice};
use crate::curve::{
    confidence_interval, effective_sample_size, eif_components, estimate_curve, fit_psi_path,
    kernel_weights, variance_conservative, variance_eif, CurveEstimate, PsiPath, VarianceMode,
    XiMode,
};
use crate::error::{Error, Result, Warning};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::nuisance::{
    censoring_point_buffer, fit_censoring_path, fit_outcome_q_path, fit_propensity_path,
    follow_prob, make_folds, FoldAssignment, NuisanceConfig,
};
use crate::policy::{normalize_theta, optimize_theta, rule_arms, ThetaChoice, ThetaGrid};
use crate::undersmoothing::{
    dcar_a, dcar_c, dcar_psi, lambda_grid, min_score_diagnostic, select_lambda_ga,
    select_lambda_gc, select_lambda_psi, DcarContext, LambdaChoice,
};
use crate::Dataset;

/// How L1 bounds are chosen for the mechanism and surface fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundSelection {
    /// Extend each ladder past its CV choice and zero the score terms.
    #[default]
    Undersmoothed,
    /// Stop at the cross-validated bounds everywhere.
    CrossValidated,
}

/// How the bandwidth is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// Evaluate at exactly this bandwidth.
    Fixed(f64),
    /// Evaluate the whole candidate ladder and select by the trend rule.
    Adaptive,
}

/// Tuning for the full pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Cross-fitting folds B (1 disables sample splitting).
    pub folds: u32,
    /// Seed for the fold assignment.
    pub seed: u64,
    /// Basis and solver settings for the mechanism fits.
    pub mechanism: NuisanceConfig,
    /// Basis and solver settings for the outcome regression.
    pub outcome: NuisanceConfig,
    /// Basis and solver settings for the pooled surface fit.
    pub surface: NuisanceConfig,
    /// Ascending CV bound ladder for the mechanisms.
    pub mech_bounds: Vec<f64>,
    /// Ascending CV bound ladder for the outcome regression and surface.
    pub surf_bounds: Vec<f64>,
    /// Kernel family for the stratum smoothing.
    pub kernel: KernelFamily,
    /// Kernel order J.
    pub kernel_order: usize,
    /// Bound-selection mode.
    pub selection: BoundSelection,
    /// Bandwidth resolution mode.
    pub bandwidth: BandwidthRule,
    /// Geometric extension factor for undersmoothing grids.
    pub grid_factor: f64,
    /// Number of points in each undersmoothing grid.
    pub grid_points: usize,
    /// Multipliers on the reference rate for the bandwidth ladder.
    pub multipliers: Vec<f64>,
    /// Trend-adjustment multiplier for bandwidth selection.
    pub kappa: f64,
    /// Surface-weight stabilizer mode.
    pub xi: XiMode,
    /// Variance estimator for the reported intervals.
    pub variance: VarianceMode,
    /// Two-sided miscoverage level of the intervals.
    pub alpha: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            folds: 5,
            seed: 0,
            mechanism: NuisanceConfig::default(),
            outcome: NuisanceConfig::default(),
            surface: NuisanceConfig::default(),
            mech_bounds: default_bound_ladder(),
            surf_bounds: default_bound_ladder(),
            kernel: KernelFamily::Epanechnikov,
            kernel_order: 1,
            selection: BoundSelection::Undersmoothed,
            bandwidth: BandwidthRule::Adaptive,
            grid_factor: 10.0,
            grid_points: 20,
            multipliers: crate::bandwidth::DEFAULT_MULTIPLIERS.to_vec(),
            kappa: crate::bandwidth::default_kappa(),
            xi: XiMode::One,
            variance: VarianceMode::Eif,
            alpha: 0.05,
        }
    }
}

/// The default CV bound ladder: nine geometric points from 0.05 to 25.
pub fn default_bound_ladder() -> Vec<f64> {
    let ratio = (25.0_f64 / 0.05).powf(1.0 / 8.0);
    let mut grid = Vec::with_capacity(9);
    let mut b = 0.05;
    for _ in 0..9 {
        grid.push(b);
        b *= ratio;
    }
    grid[8] = 25.0;
    grid
}

/// Cross-fitted mechanism predictions feeding the downstream stages.
///
/// Externally produced predictions (e.g. from a non-HAL learner) can be
/// injected through [`estimate_with_mechanisms`]; the bound fields then
/// carry whatever provenance values the caller wants reported.
#[derive(Debug, Clone)]
pub struct MechanismInputs {
    /// P(A = 1 | W) per row, truncated.
    pub ga: Vec<f64>,
    /// Censoring probability at the observed arm per row, truncated.
    pub gc_obs: Vec<f64>,
    /// Censoring probability at the rule's arm per row, truncated.
    pub gc_rule: Vec<f64>,
    /// Selected (or reported) treatment-mechanism bound.
    pub lambda_ga: f64,
    /// Selected (or reported) censoring-mechanism bound.
    pub lambda_gc: f64,
    /// (bound, treatment score) pairs behind the selection, if any.
    pub dcar_ga: Vec<(f64, f64)>,
    /// (bound, censoring score) pairs behind the selection, if any.
    pub dcar_gc: Vec<(f64, f64)>,
}

/// Score scans and fit diagnostics retained for reporting.
#[derive(Debug, Clone, Default)]
pub struct PipelineDiagnostics {
    /// Treatment-mechanism score per candidate bound.
    pub dcar_ga: Vec<(f64, f64)>,
    /// Censoring-mechanism score per candidate bound.
    pub dcar_gc: Vec<(f64, f64)>,
    /// Surface score per candidate bound, at the selected bandwidth.
    pub dcar_psi: Vec<(f64, f64)>,
    /// Minimum absolute empirical score over the selected surface fit's
    /// active basis functions (per fold, the smallest).
    pub min_score: f64,
    /// Target rates for `min_score`: (n^{-1/2}·h^{r/2}, n^{-1/2}).
    pub score_rates: (f64, f64),
}

/// The full output of one regimen estimation.
#[derive(Debug, Clone)]
pub struct RegimenEstimate {
    /// The (normalized) rule direction.
    pub theta: Vec<f64>,
    /// The stratum point.
    pub v0: Vec<f64>,
    /// One estimate per candidate bandwidth, ascending in h.
    pub per_h: Vec<CurveEstimate>,
    /// Index of the resolved bandwidth in `per_h`.
    pub selected: usize,
    /// Trend-rule provenance (`None` under a fixed bandwidth).
    pub h_choice: Option<BandwidthChoice>,
    /// Non-fatal conditions encountered along the way.
    pub warnings: Vec<Warning>,
    /// Score scans and fit diagnostics.
    pub diagnostics: PipelineDiagnostics,
}

impl RegimenEstimate {
    /// The estimate at the resolved bandwidth.
    pub fn best(&self) -> &CurveEstimate {
        &self.per_h[self.selected]
    }
}

/// Per-row pipeline primitives shared by several stages.
struct RowData {
    arms: Vec<u8>,
    follow: Vec<u8>,
    dc: Vec<u8>,
    surv: Vec<f64>,
}

fn row_data(data: &Dataset, t: f64, theta: &[f64]) -> Result<RowData> {
    let arms = rule_arms(data, theta)?;
    let dc = data.delta_c(t);
    let follow: Vec<u8> =
        data.a().iter().zip(&arms).map(|(&a, &d)| u8::from(a == d)).collect();
    Ok(RowData { arms, follow, dc, surv: data.surv_indicator(t) })
}

/// The reference bandwidth n^{−1/(2J+r)} used wherever a single working
/// bandwidth is needed before the h loop (mechanism score scans, the
/// stabilizer).
fn reference_bandwidth(cfg: &PipelineConfig, n: usize, r: usize) -> f64 {
    match cfg.bandwidth {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::Adaptive => {
            (n as f64).powf(-1.0 / (2 * cfg.kernel_order + r) as f64)
        }
    }
}

fn kernel_at(cfg: &PipelineConfig, v0: &[f64], h: f64) -> Result<KernelSpec> {
    KernelSpec::new(cfg.kernel, v0.to_vec(), h, cfg.kernel_order)
}

/// Fits the treatment and censoring mechanisms, undersmoothing their
/// bounds when the configuration asks for it.
#[allow(clippy::too_many_arguments)]
fn fit_mechanisms(
    data: &Dataset,
    t: f64,
    v0: &[f64],
    theta: &[f64],
    rows: &RowData,
    folds: &FoldAssignment,
    cfg: &PipelineConfig,
) -> Result<MechanismInputs> {
    let ga_path = fit_propensity_path(data, &cfg.mechanism, &cfg.mech_bounds, folds)?;
    let gc_path = fit_censoring_path(data, t, &cfg.mechanism, &cfg.mech_bounds, folds)?;
    let a_cv = ga_path.cv_best_index();
    let c_cv = gc_path.cv_best_index();
    let ga_cv = ga_path.per_bound[a_cv].predictions.clone();
    let gc_obs_cv = gc_path.per_bound[c_cv].predictions.clone();
    let rule_points = censoring_point_buffer(data, &rows.arms);
    let gc_rule_cv = gc_path.per_bound[c_cv].cross_predict(folds, &rule_points)?;

    if cfg.selection == BoundSelection::CrossValidated {
        return Ok(MechanismInputs {
            ga: ga_cv,
            gc_obs: gc_obs_cv,
            gc_rule: gc_rule_cv,
            lambda_ga: cfg.mech_bounds[a_cv],
            lambda_gc: cfg.mech_bounds[c_cv],
            dcar_ga: Vec::new(),
            dcar_gc: Vec::new(),
        });
    }

    // Preliminary outcome regression and surface at the CV mechanisms:
    // the score terms need (Q̂ − Ψ̂) as a contrast, for which CV-quality
    // fits suffice.
    let q_path =
        fit_outcome_q_path(data, t, &rows.arms, &gc_obs_cv, &cfg.outcome, &cfg.surf_bounds, folds)?;
    let q_prelim = q_path.per_bound[q_path.cv_best_index()].predictions.clone();
    let grid_theta = ThetaGrid::uniform(vec![theta.to_vec()])?;
    let psi_path = fit_psi_path(
        data,
        t,
        &grid_theta,
        &ga_cv,
        &gc_obs_cv,
        None,
        &cfg.surface,
        &cfg.surf_bounds,
        folds,
    )?;
    let psi_prelim = psi_path.surface(psi_path.cv_best_index());

    let h_ref = reference_bandwidth(cfg, data.n(), data.v_cols().len());
    let k_ref = kernel_weights(data, &kernel_at(cfg, v0, h_ref)?)?;

    // Treatment mechanism: extend the ladder and zero the score.
    let grid_a = lambda_grid(cfg.mech_bounds[a_cv], cfg.grid_factor, cfg.grid_points)?;
    let ga_ext = fit_propensity_path(data, &cfg.mechanism, &grid_a, folds)?;
    let mut scan_a = Vec::with_capacity(grid_a.len());
    for (k, &lam) in grid_a.iter().enumerate() {
        let preds = &ga_ext.per_bound[k].predictions;
        let ga_follow: Vec<f64> = preds
            .iter()
            .zip(&rows.arms)
            .map(|(&p, &arm)| follow_prob(p, arm))
            .collect();
        let ctx = DcarContext {
            k_vals: &k_ref,
            dc: &rows.dc,
            follow: &rows.follow,
            surv: &rows.surv,
            ga_follow: &ga_follow,
            gc_rule: &gc_rule_cv,
            folds,
        };
        scan_a.push((lam, dcar_a(&ctx, &q_prelim, &psi_prelim)?.value));
    }
    let choice_a = select_lambda_ga(&scan_a)?;
    let ga_final = ga_ext.per_bound[choice_a.index].predictions.clone();
    let ga_follow_final: Vec<f64> = ga_final
        .iter()
        .zip(&rows.arms)
        .map(|(&p, &arm)| follow_prob(p, arm))
        .collect();

    // Censoring mechanism, with the treatment fit frozen at its choice.
    let grid_c = lambda_grid(cfg.mech_bounds[c_cv], cfg.grid_factor, cfg.grid_points)?;
    let gc_ext = fit_censoring_path(data, t, &cfg.mechanism, &grid_c, folds)?;
    let mut scan_c = Vec::with_capacity(grid_c.len());
    let mut gc_rule_by_bound = Vec::with_capacity(grid_c.len());
    for (k, &lam) in grid_c.iter().enumerate() {
        let gc_rule_k = gc_ext.per_bound[k].cross_predict(folds, &rule_points)?;
        let ctx = DcarContext {
            k_vals: &k_ref,
            dc: &rows.dc,
            follow: &rows.follow,
            surv: &rows.surv,
            ga_follow: &ga_follow_final,
            gc_rule: &gc_rule_k,
            folds,
        };
        scan_c.push((lam, dcar_c(&ctx, &q_prelim, &psi_prelim)?.value));
        gc_rule_by_bound.push(gc_rule_k);
    }
    let choice_c = select_lambda_gc(&scan_c)?;
    Ok(MechanismInputs {
        ga: ga_final,
        gc_obs: gc_ext.per_bound[choice_c.index].predictions.clone(),
        gc_rule: gc_rule_by_bound.swap_remove(choice_c.index),
        lambda_ga: choice_a.lambda,
        lambda_gc: choice_c.lambda,
        dcar_ga: scan_a,
        dcar_gc: scan_c,
    })
}

/// Estimates Ψ(v₀, θ) for one rule, fitting mechanisms internally.
///
/// `theta` is normalized to unit length first. See [`PipelineConfig`] for
/// every knob; [`RegimenEstimate::best`] is the headline number.
///
/// # Errors
///
/// Anything the stage fits raise: [`Error::EmptyRegimen`] when no
/// uncensored row follows the rule, [`Error::ZeroKernelMass`] when a fold
/// sees no kernel-supported row, [`Error::InvalidInput`] on malformed
/// inputs, solver errors otherwise.
pub fn estimate_regimen(
    data: &Dataset,
    t: f64,
    v0: &[f64],
    theta: &[f64],
    cfg: &PipelineConfig,
) -> Result<RegimenEstimate> {
    let theta = normalize_theta(theta)?;
    if v0.len() != data.v_cols().len() {
        return Err(Error::invalid(format!(
            "v0 has {} coordinates, the dataset has {} stratum columns",
            v0.len(),
            data.v_cols().len()
        )));
    }
    let folds = make_folds(data.n(), cfg.folds, cfg.seed)?;
    let rows = row_data(data, t, &theta)?;
    let mech = fit_mechanisms(data, t, v0, &theta, &rows, &folds, cfg)?;
    estimate_core(data, t, v0, &theta, mech, &rows, &folds, cfg)
}

/// Estimates Ψ(v₀, θ) with externally supplied mechanism predictions.
///
/// The outcome regression and surface still come from the constrained
/// fits; only ĝᵃ and ĝᶜ are taken as given. Bound selection for the
/// surface follows `cfg.selection` as usual.
///
/// # Errors
///
/// As [`estimate_regimen`], plus [`Error::InvalidInput`] when the
/// prediction vectors are malformed.
pub fn estimate_with_mechanisms(
    data: &Dataset,
    t: f64,
    v0: &[f64],
    theta: &[f64],
    mech: MechanismInputs,
    cfg: &PipelineConfig,
) -> Result<RegimenEstimate> {
    let theta = normalize_theta(theta)?;
    let n = data.n();
    if mech.ga.len() != n || mech.gc_obs.len() != n || mech.gc_rule.len() != n {
        return Err(Error::invalid("mechanism predictions must cover every row"));
    }
    if mech
        .ga
        .iter()
        .chain(&mech.gc_obs)
        .chain(&mech.gc_rule)
        .any(|p| !p.is_finite() || *p <= 0.0 || *p >= 1.0)
    {
        return Err(Error::invalid("mechanism predictions must lie strictly inside (0, 1)"));
    }
    let folds = make_folds(n, cfg.folds, cfg.seed)?;
    let rows = row_data(data, t, &theta)?;
    estimate_core(data, t, v0, &theta, mech, &rows, &folds, cfg)
}

/// Shared core: outcome regression, surface path, per-bandwidth
/// estimates, bandwidth resolution.
#[allow(clippy::too_many_arguments)]
fn estimate_core(
    data: &Dataset,
    t: f64,
    v0: &[f64],
    theta: &[f64],
    mech: MechanismInputs,
    rows: &RowData,
    folds: &FoldAssignment,
    cfg: &PipelineConfig,
) -> Result<RegimenEstimate> {
    let n = data.n();
    let r = data.v_cols().len();
    if r == 0 {
        return Err(Error::invalid("the dataset has no stratum columns to smooth over"));
    }
    let mut warnings = Vec::new();

    // Final outcome regression, CV-selected on the chosen censoring fit.
    let q_path = fit_outcome_q_path(
        data,
        t,
        &rows.arms,
        &mech.gc_obs,
        &cfg.outcome,
        &cfg.surf_bounds,
        folds,
    )?;
    let q_final = q_path.per_bound[q_path.cv_best_index()].predictions.clone();

    // Stabilizer, if requested: kernel weights at the reference
    // bandwidth, normalized to mean one (zeros localize the fit).
    let grid_theta = ThetaGrid::uniform(vec![theta.to_vec()])?;
    let xi_buf: Option<Vec<f64>> = match cfg.xi {
        XiMode::One => None,
        XiMode::Stabilized => {
            let h_ref = reference_bandwidth(cfg, n, r);
            let k_ref = kernel_weights(data, &kernel_at(cfg, v0, h_ref)?)?;
            let mean = k_ref.iter().sum::<f64>() / n as f64;
            if mean <= 0.0 {
                return Err(Error::ZeroKernelMass { h: h_ref });
            }
            Some(k_ref.iter().map(|k| k / mean).collect())
        }
    };

    // Surface path: CV ladder for the base choice, then the extended
    // grid in undersmoothed mode.
    let psi_cv_path = fit_psi_path(
        data,
        t,
        &grid_theta,
        &mech.ga,
        &mech.gc_obs,
        xi_buf.as_deref(),
        &cfg.surface,
        &cfg.surf_bounds,
        folds,
    )?;
    let lambda_psi_cv = cfg.surf_bounds[psi_cv_path.cv_best_index()];
    let (psi_path, psi_grid) = match cfg.selection {
        BoundSelection::CrossValidated => (psi_cv_path, vec![lambda_psi_cv]),
        BoundSelection::Undersmoothed => {
            let grid = lambda_grid(lambda_psi_cv, cfg.grid_factor, cfg.grid_points)?;
            let path = fit_psi_path(
                data,
                t,
                &grid_theta,
                &mech.ga,
                &mech.gc_obs,
                xi_buf.as_deref(),
                &cfg.surface,
                &grid,
                folds,
            )?;
            (path, grid)
        }
    };

    let ga_follow: Vec<f64> = mech
        .ga
        .iter()
        .zip(&rows.arms)
        .map(|(&p, &arm)| follow_prob(p, arm))
        .collect();

    let hs: Vec<f64> = match cfg.bandwidth {
        BandwidthRule::Fixed(h) => {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
            }
            vec![h]
        }
        BandwidthRule::Adaptive => {
            candidate_grid(n, r, cfg.kernel_order, &cfg.multipliers)?
        }
    };

    let mut per_h: Vec<CurveEstimate> = Vec::with_capacity(hs.len());
    let mut cons_sigmas = Vec::with_capacity(hs.len());
    let mut psi_scans: Vec<Vec<(f64, f64)>> = Vec::with_capacity(hs.len());
    let mut psi_choices: Vec<LambdaChoice> = Vec::with_capacity(hs.len());
    for &h in &hs {
        let k_vals = kernel_weights(data, &kernel_at(cfg, v0, h)?)?;
        // The influence function does not involve the surface, so one
        // report serves every candidate bound at this bandwidth.
        let eif = eif_components(
            &k_vals,
            &rows.dc,
            &rows.follow,
            &rows.surv,
            &q_final,
            &ga_follow,
            &mech.gc_rule,
            folds,
        )?;
        let sigma_eif = variance_eif(&eif, h, r).sqrt();
        // The surface-score threshold works on the unscaled influence
        // second moment √(P_n D*²), not the h-standardized sigma.
        let sigma_thresh =
            (eif.values.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();

        let ctx = DcarContext {
            k_vals: &k_vals,
            dc: &rows.dc,
            follow: &rows.follow,
            surv: &rows.surv,
            ga_follow: &ga_follow,
            gc_rule: &mech.gc_rule,
            folds,
        };
        let mut scan = Vec::with_capacity(psi_grid.len());
        for (k, &lam) in psi_grid.iter().enumerate() {
            let surface = psi_path.surface(k);
            scan.push((lam, dcar_psi(&ctx, &surface)?.value));
        }
        let choice = match cfg.selection {
            BoundSelection::CrossValidated => {
                LambdaChoice { index: 0, lambda: psi_grid[0], criterion: scan[0].1.abs() }
            }
            BoundSelection::Undersmoothed => {
                let (choice, warn) = select_lambda_psi(&scan, sigma_thresh, n)?;
                if let Some(w) = warn {
                    warnings.push(w);
                }
                choice
            }
        };
        let surface = psi_path.surface(choice.index);
        let psi_hat = estimate_curve(&surface, 1, 0, &k_vals, folds)?;
        let sigma_cons =
            variance_conservative(&k_vals, &surface, psi_hat, folds, h, r)?.sqrt();
        let sigma_used = match cfg.variance {
            VarianceMode::Eif => sigma_eif,
            VarianceMode::Conservative => sigma_cons,
        };
        let (ci_lower, ci_upper) = confidence_interval(psi_hat, sigma_used, n, h, r, cfg.alpha)?;
        per_h.push(CurveEstimate {
            psi_hat,
            sigma_hat: sigma_used,
            ci_lower,
            ci_upper,
            h_used: h,
            lambda_psi: choice.lambda,
            lambda_ga: mech.lambda_ga,
            lambda_gc: mech.lambda_gc,
            n_eff: effective_sample_size(&k_vals),
        });
        cons_sigmas.push(sigma_cons);
        psi_scans.push(scan);
        psi_choices.push(choice);
    }

    let (selected, h_choice) = match cfg.bandwidth {
        BandwidthRule::Fixed(_) => (0, None),
        BandwidthRule::Adaptive => {
            let cands: Vec<crate::bandwidth::BandwidthCandidate> = per_h
                .iter()
                .zip(&cons_sigmas)
                .map(|(est, &s)| crate::bandwidth::BandwidthCandidate {
                    h: est.h_used,
                    psi_hat: est.psi_hat,
                    sigma: s,
                })
                .collect();
            let pick = select_bandwidth(&cands, n, r, cfg.kappa)?;
            if let Some(w) = pick.warning.clone() {
                warnings.push(w);
            }
            (pick.index, Some(pick))
        }
    };

    let diagnostics = surface_diagnostics(
        &psi_path,
        &psi_choices[selected],
        &mech,
        psi_scans.swap_remove(selected),
        n,
        per_h[selected].h_used,
        r,
    );

    Ok(RegimenEstimate {
        theta: theta.to_vec(),
        v0: v0.to_vec(),
        per_h,
        selected,
        h_choice,
        warnings,
        diagnostics,
    })
}

/// Assembles reporting diagnostics for the selected surface fit.
fn surface_diagnostics(
    psi_path: &PsiPath,
    choice: &LambdaChoice,
    mech: &MechanismInputs,
    dcar_psi_scan: Vec<(f64, f64)>,
    n: usize,
    h: f64,
    r: usize,
) -> PipelineDiagnostics {
    let pooled_rows = psi_path.pooled.n * psi_path.pooled.m;
    let min_score = psi_path
        .basis
        .design(&psi_path.pooled.points, pooled_rows)
        .ok()
        .map(|design| {
            let mut worst = f64::INFINITY;
            for (b_idx, fit) in psi_path.fold_fits(choice.index).iter().enumerate() {
                let w_train = psi_path
                    .folds_pooled
                    .train_weights(&psi_path.pooled.weights, b_idx as u32 + 1);
                if let Ok(score) =
                    min_score_diagnostic(fit, &design, &psi_path.pooled.outcome, &w_train)
                {
                    worst = worst.min(score);
                }
            }
            worst
        })
        .filter(|v| v.is_finite())
        .unwrap_or(f64::NAN);
    let n_f = n as f64;
    PipelineDiagnostics {
        dcar_ga: mech.dcar_ga.clone(),
        dcar_gc: mech.dcar_gc.clone(),
        dcar_psi: dcar_psi_scan,
        min_score,
        score_rates: (h.powi(r as i32).sqrt() / n_f.sqrt(), 1.0 / n_f.sqrt()),
    }
}

/// The outcome of a policy search over a direction grid.
#[derive(Debug, Clone)]
pub struct PolicySearch {
    /// The winning direction with its smoothed value.
    pub choice: ThetaChoice,
    /// Smoothed value per grid direction (NaN where evaluation failed).
    pub values: Vec<f64>,
    /// The surface bound the pooled fit used.
    pub lambda_psi: f64,
    /// The bandwidth the comparison used.
    pub h: f64,
}

/// Finds the direction with the largest smoothed response at `v0`.
///
/// One pooled surface fit (over the whole grid, cross-validated bounds)
/// serves every candidate; each direction is then scored by smoothing its
/// surface slice at the fixed bandwidth `h`. Directions whose evaluation
/// fails (say, a fold without kernel-supported followers) are skipped and
/// recorded in the returned [`ThetaChoice::failures`].
///
/// # Errors
///
/// [`Error::NoFeasibleTheta`] when every direction fails;
/// [`Error::EmptyRegimen`] when no direction has weighted rows at all;
/// fit errors propagate.
pub fn optimize_policy(
    data: &Dataset,
    t: f64,
    v0: &[f64],
    grid: &ThetaGrid,
    h: f64,
    cfg: &PipelineConfig,
) -> Result<PolicySearch> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
    }
    let folds = make_folds(data.n(), cfg.folds, cfg.seed)?;
    let ga_path = fit_propensity_path(data, &cfg.mechanism, &cfg.mech_bounds, &folds)?;
    let gc_path = fit_censoring_path(data, t, &cfg.mechanism, &cfg.mech_bounds, &folds)?;
    let ga = ga_path.per_bound[ga_path.cv_best_index()].predictions.clone();
    let gc_obs = gc_path.per_bound[gc_path.cv_best_index()].predictions.clone();
    let psi_path = fit_psi_path(
        data,
        t,
        grid,
        &ga,
        &gc_obs,
        None,
        &cfg.surface,
        &cfg.surf_bounds,
        &folds,
    )?;
    let best = psi_path.cv_best_index();
    let surface = psi_path.surface(best);
    let k_vals = kernel_weights(data, &kernel_at(cfg, v0, h)?)?;
    let m = grid.len();
    let mut values = vec![f64::NAN; m];
    let choice = optimize_theta(grid, |j, _| {
        let v = estimate_curve(&surface, m, j, &k_vals, &folds)?;
        values[j] = v;
        Ok(v)
    })?;
    Ok(PolicySearch {
        choice,
        values,
        lambda_psi: cfg.surf_bounds[best],
        h,
    })
}
