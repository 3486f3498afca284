//! Weighted L1-bound-constrained fitting by penalized coordinate descent.
//!
//! The estimator minimizes a weighted empirical loss subject to a bound on
//! the L1 norm of the full coefficient vector — intercept included, since the
//! norm tracks the sectional variation of the fitted function and the
//! intercept is its value at the support minimum:
//!
//! ```text
//! minimize (1/n) Σ_i w_i ℓ(y_i, η_i)   s.t.   |α₀| + Σ_j |α_j| ≤ bound
//! ```
//!
//! with `η = α₀ + Xα`, squared-error loss for the identity link and Bernoulli
//! log-loss for the logit link. The bound constraint is handled by solving
//! the penalized form `loss + μ‖α‖₁` with cyclic coordinate descent and
//! locating, by bisection on `μ`, the penalty whose solution norm matches the
//! bound (the norm is nonincreasing in `μ`). Logit fits wrap the quadratic
//! subproblem in an iteratively reweighted least-squares loop with step
//! halving.
//!
//! Returned fits are always feasible: the reported norm never exceeds the
//! requested bound by more than 1e-8.

use std::sync::Arc;

use crate::data::ColMatrix;
use crate::error::{Error, Result};
use crate::hal::basis::HalBasis;
use crate::num::expit;

/// Cap on |linear predictor| before applying the logistic link, keeping
/// probabilities strictly inside (0, 1).
pub const ETA_CAP: f64 = 30.0;

/// Floor on the logistic curvature p(1−p) in IRLS working weights.
const PQ_FLOOR: f64 = 1e-5;

/// Relative objective-improvement floor below which a coordinate-descent
/// sweep counts as converged even while coefficients still drift.  Along
/// near-collinear column bundles the iterates wander a flat valley: a sweep
/// that improves the objective by less than this fraction of its magnitude
/// leaves the fit, its predictions, and its L1 norm unchanged at any
/// statistically meaningful resolution.
const PLATEAU_REL: f64 = 1e-10;

/// Model link: plain least squares or logistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Identity,
    Logit,
}

/// Solver controls.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Coordinate-descent sweep budget per quadratic solve.
    pub max_sweeps: usize,
    /// Convergence threshold on the maximum absolute coefficient change.
    pub tol: f64,
    /// Outer IRLS round budget (logit link only).
    pub max_irls: usize,
    /// Bisection refinements mapping the bound to a penalty.
    pub bisect_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_sweeps: 10_000, tol: 1e-8, max_irls: 100, bisect_iters: 60 }
    }
}

/// A fitted constrained model.
#[derive(Debug, Clone)]
pub struct HalFit {
    pub intercept: f64,
    /// Aligned with the design columns (and the basis entries, if attached).
    pub coefficients: Vec<f64>,
    /// |intercept| + Σ|coefficients|.
    pub l1_norm: f64,
    pub link: Link,
    /// Training loss (1/n)Σ wℓ at the solution.
    pub loss: f64,
    /// Penalty level μ whose solution realized the bound (diagnostic; also
    /// the multiplier for KKT certificates).
    pub penalty: f64,
    /// Total coordinate-descent sweeps spent.
    pub sweeps: usize,
    /// Basis that generated the design columns, when fitted through one.
    pub basis: Option<Arc<HalBasis>>,
}

impl HalFit {
    /// Attaches the generating basis so the fit can predict at raw points.
    pub fn with_basis(mut self, basis: Arc<HalBasis>) -> Self {
        self.basis = Some(basis);
        self
    }

    /// Linear predictor for one pre-evaluated feature row.
    #[inline]
    pub fn linear_predictor(&self, features: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for (b, f) in self.coefficients.iter().zip(features) {
            if *b != 0.0 {
                eta += b * f;
            }
        }
        eta
    }

    /// Linear predictor for every row of a design matrix.
    pub fn linear_predictor_design(&self, design: &ColMatrix) -> Vec<f64> {
        let mut eta = vec![self.intercept; design.rows()];
        for (j, &b) in self.coefficients.iter().enumerate() {
            if b != 0.0 {
                for (e, x) in eta.iter_mut().zip(design.col(j)) {
                    *e += b * x;
                }
            }
        }
        eta
    }

    /// Applies the link to a linear predictor value.
    #[inline]
    pub fn response(&self, eta: f64) -> f64 {
        match self.link {
            Link::Identity => eta,
            Link::Logit => expit(eta.clamp(-ETA_CAP, ETA_CAP)),
        }
    }

    /// Predictions for every row of a design matrix.
    pub fn predict_design(&self, design: &ColMatrix) -> Vec<f64> {
        self.linear_predictor_design(design).into_iter().map(|e| self.response(e)).collect()
    }

    /// Prediction at a raw covariate point; requires an attached basis.
    pub fn predict_point(&self, x: &[f64], scratch: &mut Vec<f64>) -> Result<f64> {
        let basis = self
            .basis
            .as_ref()
            .ok_or_else(|| Error::invalid("fit has no basis attached; predict via design"))?;
        scratch.resize(basis.len(), 0.0);
        basis.evaluate(x, scratch)?;
        Ok(self.response(self.linear_predictor(scratch)))
    }

    /// Number of nonzero (non-intercept) coefficients.
    pub fn support_size(&self) -> usize {
        self.coefficients.iter().filter(|b| **b != 0.0).count()
    }
}

/// Soft-thresholding operator: sign(z)·max(|z| − t, 0).
#[inline]
pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Weighted empirical loss (1/n)Σ w_i ℓ(y_i, η_i): squared error halved for
/// the identity link, Bernoulli log-loss for logit (η capped at ±[`ETA_CAP`]).
pub fn weighted_loss(link: Link, y: &[f64], w: &[f64], eta: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut total = 0.0;
    match link {
        Link::Identity => {
            for ((&yi, &wi), &ei) in y.iter().zip(w).zip(eta) {
                if wi > 0.0 {
                    let r = yi - ei;
                    total += 0.5 * wi * r * r;
                }
            }
        }
        Link::Logit => {
            for ((&yi, &wi), &ei) in y.iter().zip(w).zip(eta) {
                if wi > 0.0 {
                    let e = ei.clamp(-ETA_CAP, ETA_CAP);
                    // −[y·η − log(1+exp(η))], numerically stable split.
                    let log1pexp = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
                    total += wi * (log1pexp - yi * e);
                }
            }
        }
    }
    total / n
}

/// Mutable coordinate-descent state for one design matrix.
struct Solver<'a> {
    x: &'a ColMatrix,
    y: &'a [f64],
    w: &'a [f64],
    link: Link,
    opts: FitOptions,
    n_inv: f64,
    b0: f64,
    beta: Vec<f64>,
    /// Linear predictor, kept in sync with (b0, beta).
    eta: Vec<f64>,
    /// IRLS working weights/response (aliases y/w for identity link).
    v: Vec<f64>,
    z: Vec<f64>,
    /// Working residual z − η.
    r: Vec<f64>,
    /// (1/n) Σ v x² per column, for the current working weights.
    col_sq: Vec<f64>,
    vbar: f64,
    sweeps: usize,
    /// Identity-link working data is weight-only and never changes; set once.
    identity_ready: bool,
    /// Loss of the all-zero model, lazily cached (saturation stopping).
    null_loss: Option<f64>,
}

impl<'a> Solver<'a> {
    fn new(x: &'a ColMatrix, y: &'a [f64], w: &'a [f64], link: Link, opts: FitOptions) -> Self {
        let n = x.rows();
        Solver {
            x,
            y,
            w,
            link,
            opts,
            n_inv: 1.0 / n as f64,
            b0: 0.0,
            beta: vec![0.0; x.cols()],
            eta: vec![0.0; n],
            v: vec![0.0; n],
            z: vec![0.0; n],
            r: vec![0.0; n],
            col_sq: vec![0.0; x.cols()],
            vbar: 0.0,
            sweeps: 0,
            identity_ready: false,
            null_loss: None,
        }
    }

    /// Loss of the all-zero coefficient vector.
    fn null_loss(&mut self) -> f64 {
        if self.null_loss.is_none() {
            let zeros = vec![0.0; self.y.len()];
            self.null_loss = Some(weighted_loss(self.link, self.y, self.w, &zeros));
        }
        self.null_loss.unwrap()
    }

    fn norm(&self) -> f64 {
        self.b0.abs() + self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn loss(&self) -> f64 {
        weighted_loss(self.link, self.y, self.w, &self.eta)
    }

    /// Recomputes the quadratic-subproblem data from the current η.
    fn refresh_working(&mut self) {
        match self.link {
            Link::Identity => {
                self.v.copy_from_slice(self.w);
                self.z.copy_from_slice(self.y);
            }
            Link::Logit => {
                for i in 0..self.y.len() {
                    let p = expit(self.eta[i].clamp(-ETA_CAP, ETA_CAP));
                    let pq = (p * (1.0 - p)).max(PQ_FLOOR);
                    self.v[i] = self.w[i] * pq;
                    self.z[i] = self.eta[i] + (self.y[i] - p) / pq;
                }
            }
        }
        for (ri, (zi, ei)) in self.r.iter_mut().zip(self.z.iter().zip(&self.eta)) {
            *ri = zi - ei;
        }
        self.vbar = self.v.iter().sum::<f64>() * self.n_inv;
        for j in 0..self.x.cols() {
            let col = self.x.col(j);
            let mut s = 0.0;
            for (xi, vi) in col.iter().zip(&self.v) {
                if *vi > 0.0 {
                    s += vi * xi * xi;
                }
            }
            self.col_sq[j] = s * self.n_inv;
        }
    }

    /// One coordinate-descent pass; `full` visits every column, otherwise
    /// only the active (nonzero) ones. Returns the largest coefficient move.
    fn sweep(&mut self, mu: f64, full: bool) -> f64 {
        let mut max_delta = 0.0_f64;
        // Intercept coordinate (penalized like the rest).
        if self.vbar > 0.0 {
            let mut dot = 0.0;
            for (vi, ri) in self.v.iter().zip(&self.r) {
                dot += vi * ri;
            }
            let rho = dot * self.n_inv + self.vbar * self.b0;
            let new = soft_threshold(rho, mu) / self.vbar;
            let delta = new - self.b0;
            if delta != 0.0 {
                for ri in self.r.iter_mut() {
                    *ri -= delta;
                }
                self.b0 = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        for j in 0..self.beta.len() {
            let old = self.beta[j];
            if !full && old == 0.0 {
                continue;
            }
            let cj = self.col_sq[j];
            if cj <= 0.0 {
                continue;
            }
            let col = self.x.col(j);
            let mut dot = 0.0;
            for ((xi, vi), ri) in col.iter().zip(&self.v).zip(&self.r) {
                dot += vi * xi * ri;
            }
            let rho = dot * self.n_inv + cj * old;
            let new = soft_threshold(rho, mu) / cj;
            let delta = new - old;
            if delta != 0.0 {
                for (ri, xi) in self.r.iter_mut().zip(col) {
                    *ri -= delta * xi;
                }
                self.beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        self.sweeps += 1;
        max_delta
    }

    /// Penalized quadratic objective (1/2n) Σ v r² + μ‖(α₀, α)‖₁ of the
    /// current state, used for plateau detection.
    fn quad_objective(&self, mu: f64) -> f64 {
        let mut sq = 0.0;
        for (vi, ri) in self.v.iter().zip(&self.r) {
            sq += vi * ri * ri;
        }
        0.5 * sq * self.n_inv + mu * self.norm()
    }

    /// Solves the quadratic (working-response) subproblem at penalty `mu`.
    ///
    /// Stops when a sweep moves no coefficient by more than `tol`, or when a
    /// full sweep improves the penalized objective by less than
    /// [`PLATEAU_REL`] of its magnitude — on strongly correlated columns
    /// coordinate descent contracts so slowly (rate 1 − λ_min/λ_max per
    /// sweep) that coefficient moves stall above any fixed tolerance long
    /// after the objective has converged to working precision.
    fn solve_quadratic(&mut self, mu: f64) -> Result<()> {
        let mut spent = 0;
        let mut prev_obj = f64::INFINITY;
        loop {
            let delta = self.sweep(mu, true);
            spent += 1;
            if delta < self.opts.tol {
                return Ok(());
            }
            let obj = self.quad_objective(mu);
            if prev_obj - obj <= PLATEAU_REL * obj.abs().max(1e-8) {
                return Ok(());
            }
            prev_obj = obj;
            // Iterate the active set until stable, then re-check globally.
            loop {
                let d = self.sweep(mu, false);
                spent += 1;
                if d < self.opts.tol {
                    break;
                }
                let inner_obj = self.quad_objective(mu);
                if prev_obj - inner_obj <= PLATEAU_REL * inner_obj.abs().max(1e-8) {
                    prev_obj = inner_obj;
                    break;
                }
                prev_obj = inner_obj;
                if spent >= self.opts.max_sweeps {
                    return Err(Error::Diverged { sweeps: self.sweeps, last_change: d });
                }
            }
            if spent >= self.opts.max_sweeps {
                return Err(Error::Diverged { sweeps: self.sweeps, last_change: delta });
            }
        }
    }

    /// Fits the penalized problem at `mu` from the current state.
    fn fit_penalized(&mut self, mu: f64) -> Result<()> {
        match self.link {
            Link::Identity => {
                if self.identity_ready {
                    // v, z, col_sq are static; only the residual tracks η.
                    for (ri, (zi, ei)) in self.r.iter_mut().zip(self.z.iter().zip(&self.eta)) {
                        *ri = zi - ei;
                    }
                } else {
                    self.refresh_working();
                    self.identity_ready = true;
                }
                self.solve_quadratic(mu)?;
                // η = z − r with z = y.
                for (ei, (zi, ri)) in self.eta.iter_mut().zip(self.z.iter().zip(&self.r)) {
                    *ei = zi - ri;
                }
                Ok(())
            }
            Link::Logit => {
                let mut objective = self.loss() + mu * self.norm();
                let mut last_outer = f64::INFINITY;
                for _ in 0..self.opts.max_irls {
                    let b0_old = self.b0;
                    let beta_old = self.beta.clone();
                    let eta_old = self.eta.clone();
                    self.refresh_working();
                    self.solve_quadratic(mu)?;
                    for (ei, (zi, ri)) in self.eta.iter_mut().zip(self.z.iter().zip(&self.r)) {
                        *ei = zi - ri;
                    }
                    // Step-halve if the true penalized objective got worse
                    // (the quadratic model is only a local approximation).
                    let mut new_objective = self.loss() + mu * self.norm();
                    let mut halvings = 0;
                    while new_objective > objective + 1e-12 && halvings < 10 {
                        self.b0 = 0.5 * (self.b0 + b0_old);
                        for (b, bo) in self.beta.iter_mut().zip(&beta_old) {
                            *b = 0.5 * (*b + bo);
                        }
                        for (e, eo) in self.eta.iter_mut().zip(&eta_old) {
                            *e = 0.5 * (*e + eo);
                        }
                        new_objective = self.loss() + mu * self.norm();
                        halvings += 1;
                    }
                    let mut outer_delta = (self.b0 - b0_old).abs();
                    for (b, bo) in self.beta.iter().zip(&beta_old) {
                        outer_delta = outer_delta.max((b - bo).abs());
                    }
                    // Saturated fits creep toward the η cap in ever-smaller
                    // steps; stop once the objective has flattened or the
                    // deviance is essentially exhausted (separation).
                    let improvement = objective - new_objective;
                    objective = new_objective;
                    last_outer = outer_delta;
                    let cur_loss = new_objective - mu * self.norm();
                    if std::env::var_os("HAL_TRACE").is_some() {
                        eprintln!(
                            "irls mu={mu:.6e} obj={new_objective:.12e} impr={improvement:.3e} delta={outer_delta:.3e} halv={halvings}"
                        );
                    }
                    if outer_delta < self.opts.tol
                        || improvement.abs() < 1e-10 * objective.abs().max(1e-12)
                        || cur_loss < 1e-5 * self.null_loss()
                    {
                        return Ok(());
                    }
                }
                Err(Error::Diverged { sweeps: self.sweeps, last_change: last_outer })
            }
        }
    }

    /// Penalty at which the all-zero vector is optimal.
    fn mu_max(&self) -> f64 {
        // Gradient of the smooth loss at 0: p ≡ y for identity (η = 0),
        // p ≡ 1/2 for logit.
        let p0 = match self.link {
            Link::Identity => 0.0,
            Link::Logit => 0.5,
        };
        let n_inv = self.n_inv;
        let mut g0 = 0.0;
        for (wi, yi) in self.w.iter().zip(self.y) {
            g0 += wi * (p0 - yi);
        }
        let mut best = (g0 * n_inv).abs();
        for j in 0..self.x.cols() {
            let col = self.x.col(j);
            let mut g = 0.0;
            for ((xi, wi), yi) in col.iter().zip(self.w).zip(self.y) {
                if *wi > 0.0 {
                    g += wi * xi * (p0 - yi);
                }
            }
            best = best.max((g * n_inv).abs());
        }
        best
    }

    fn snapshot(&self) -> (f64, Vec<f64>, Vec<f64>) {
        (self.b0, self.beta.clone(), self.eta.clone())
    }

    fn restore(&mut self, snap: &(f64, Vec<f64>, Vec<f64>)) {
        self.b0 = snap.0;
        self.beta.copy_from_slice(&snap.1);
        self.eta.copy_from_slice(&snap.2);
    }

    fn to_fit(&self, penalty: f64) -> HalFit {
        HalFit {
            intercept: self.b0,
            coefficients: self.beta.clone(),
            l1_norm: self.norm(),
            link: self.link,
            loss: self.loss(),
            penalty,
            sweeps: self.sweeps,
            basis: None,
        }
    }

    /// Fits under an L1 bound by locating the matching penalty.
    ///
    /// `mu_start` lets path fitting resume the downward penalty walk from the
    /// previous bound's penalty instead of μ_max.
    fn fit_bounded(&mut self, bound: f64, mu_start: Option<f64>) -> Result<HalFit> {
        let mu_max = self.mu_max();
        if bound == 0.0 || mu_max == 0.0 {
            // Either everything is constrained to zero, or zero is already
            // unconstrained-optimal.
            self.b0 = 0.0;
            self.beta.iter_mut().for_each(|b| *b = 0.0);
            self.eta.iter_mut().for_each(|e| *e = 0.0);
            return Ok(self.to_fit(mu_max));
        }
        let mu_floor = mu_max * 1e-10;

        // Walk the penalty down geometrically until the solution norm
        // crosses the bound, warm-starting each step.
        let mut hi = mu_start.map_or(mu_max, |m| m.min(mu_max)).max(mu_floor);
        self.fit_penalized(hi)?;
        let mut hi_feasible = self.snapshot();
        let mut hi_norm = self.norm();
        if hi_norm > bound {
            // The starting penalty is already too loose (possible when a path
            // hint undershoots); restart from μ_max, where the norm is 0.
            hi = mu_max;
            self.fit_penalized(hi)?;
            hi_feasible = self.snapshot();
            hi_norm = self.norm();
        }
        let mut lo = hi;
        let mut crossed = false;
        for _ in 0..60 {
            if lo <= mu_floor {
                break;
            }
            lo = (lo * 0.5).max(mu_floor);
            self.fit_penalized(lo)?;
            let norm = self.norm();
            if norm > bound {
                crossed = true;
                break;
            }
            hi = lo;
            hi_norm = norm;
            hi_feasible = self.snapshot();
        }
        if !crossed {
            // Bound never binds: the (nearly) unpenalized fit is feasible.
            self.restore(&hi_feasible);
            return Ok(self.to_fit(hi));
        }

        // Bisect on log μ: the norm is nonincreasing in μ, so the bracket
        // [lo, hi] keeps norm(lo) > bound ≥ norm(hi).
        let mut best = hi_feasible;
        let mut best_mu = hi;
        let mut best_norm = hi_norm;
        for _ in 0..self.opts.bisect_iters {
            if hi / lo < 1.0 + 1e-12 {
                break;
            }
            let mid = (lo * hi).sqrt();
            self.fit_penalized(mid)?;
            let norm = self.norm();
            if norm > bound {
                lo = mid;
            } else {
                hi = mid;
                if norm > best_norm {
                    best_norm = norm;
                    best_mu = mid;
                    best = self.snapshot();
                }
                if bound - norm <= 1e-10 * bound.max(1.0) {
                    break;
                }
            }
        }
        self.restore(&best);
        Ok(self.to_fit(best_mu))
    }
}

fn validate_inputs(
    design: &ColMatrix,
    outcome: &[f64],
    weights: &[f64],
    link: Link,
) -> Result<()> {
    let n = design.rows();
    if outcome.len() != n || weights.len() != n {
        return Err(Error::invalid(format!(
            "design has {n} rows but outcome/weights have {}/{}",
            outcome.len(),
            weights.len()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("cannot fit on zero rows"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::invalid("at least one weight must be positive"));
    }
    if outcome.iter().any(|y| !y.is_finite()) {
        return Err(Error::invalid("outcome must be finite"));
    }
    if link == Link::Logit {
        for (y, w) in outcome.iter().zip(weights) {
            if *w > 0.0 && !(0.0..=1.0).contains(y) {
                return Err(Error::invalid("logit-link outcome must lie in [0, 1]"));
            }
        }
    }
    Ok(())
}

/// Fits coefficients under `|α₀| + Σ|α_j| ≤ l1_bound`.
///
/// # Arguments
///
/// * `design` - feature matrix (basis evaluations), one column per
///   coefficient; the intercept column is implicit.
/// * `outcome` - response vector; in [0, 1] for the logit link.
/// * `weights` - nonnegative observation weights, at least one positive.
/// * `link` - [`Link::Identity`] (squared error) or [`Link::Logit`].
/// * `l1_bound` - bound on the coefficient L1 norm, intercept included;
///   0 pins the whole vector (logit predictions become 1/2).
///
/// # Errors
///
/// [`Error::InvalidInput`] on shape or validity violations or a negative
/// bound; [`Error::Diverged`] if coordinate descent exhausts its sweep
/// budget.
pub fn fit_constrained(
    design: &ColMatrix,
    outcome: &[f64],
    weights: &[f64],
    link: Link,
    l1_bound: f64,
    opts: FitOptions,
) -> Result<HalFit> {
    validate_inputs(design, outcome, weights, link)?;
    if !l1_bound.is_finite() || l1_bound < 0.0 {
        return Err(Error::invalid(format!("l1_bound must be nonnegative, got {l1_bound}")));
    }
    let mut solver = Solver::new(design, outcome, weights, link, opts);
    solver.fit_bounded(l1_bound, None)
}

/// Fits a warm-started sequence of bounds (strictly ascending).
///
/// Training loss is nonincreasing along the returned path, since every
/// earlier solution stays feasible for every later bound.
///
/// # Errors
///
/// As [`fit_constrained`], plus [`Error::InvalidInput`] if `bounds` is empty
/// or not strictly increasing.
pub fn lasso_path(
    design: &ColMatrix,
    outcome: &[f64],
    weights: &[f64],
    link: Link,
    bounds: &[f64],
    opts: FitOptions,
) -> Result<Vec<HalFit>> {
    validate_inputs(design, outcome, weights, link)?;
    if bounds.is_empty() {
        return Err(Error::invalid("bound path must be nonempty"));
    }
    if bounds.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::invalid("bound path must be strictly increasing"));
    }
    if bounds[0] < 0.0 || !bounds.iter().all(|b| b.is_finite()) {
        return Err(Error::invalid("bounds must be finite and nonnegative"));
    }
    let mut solver = Solver::new(design, outcome, weights, link, opts);
    let mut fits = Vec::with_capacity(bounds.len());
    let mut mu_hint: Option<f64> = None;
    for &bound in bounds {
        let fit = solver.fit_bounded(bound, mu_hint)?;
        mu_hint = Some(fit.penalty);
        fits.push(fit);
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// A small dense random regression instance.
    fn random_instance(
        n: usize,
        p: usize,
        seed: u64,
        binary_y: bool,
    ) -> (ColMatrix, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![0.0; n * p];
        for v in cols.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let x = ColMatrix::from_columns(n, p, cols);
        let truth: Vec<f64> = (0..p).map(|j| if j % 2 == 0 { 0.7 } else { -0.3 }).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut eta = 0.2;
                for (j, t) in truth.iter().enumerate() {
                    eta += t * x.get(i, j);
                }
                if binary_y {
                    if rng.random::<f64>() < expit(eta) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    eta + 0.1 * rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let w = vec![1.0; n];
        (x, y, w)
    }

    #[test]
    fn zero_bound_pins_everything() {
        let (x, mut y, w) = random_instance(30, 4, 1, false);
        // Center the outcome so the unconstrained intercept is 0 too.
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        y.iter_mut().for_each(|v| *v -= mean);
        let fit = fit_constrained(&x, &y, &w, Link::Identity, 0.0, FitOptions::default()).unwrap();
        assert_eq!(fit.intercept, 0.0);
        assert!(fit.coefficients.iter().all(|b| *b == 0.0));
        assert_eq!(fit.l1_norm, 0.0);
    }

    #[test]
    fn inactive_bound_recovers_least_squares() {
        // One orthogonal-ish column: closed-form OLS comparison.
        let x = ColMatrix::from_columns(4, 1, vec![-1.5, -0.5, 0.5, 1.5]);
        let y = vec![-2.9, -1.1, 1.0, 3.1];
        let w = vec![1.0; 4];
        let fit =
            fit_constrained(&x, &y, &w, Link::Identity, 100.0, FitOptions::default()).unwrap();
        // OLS: slope = Σxy/Σx² (x is centered), intercept = mean(y).
        let slope = (-2.9 * -1.5 + -1.1 * -0.5 + 1.0 * 0.5 + 3.1 * 1.5) / (2.0 * (0.25 + 2.25));
        let mean_y = (-2.9 - 1.1 + 1.0 + 3.1) / 4.0;
        assert_abs_diff_eq!(fit.coefficients[0], slope, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.intercept, mean_y, epsilon = 1e-6);
    }

    #[test]
    fn fit_is_always_feasible() {
        let (x, y, w) = random_instance(40, 6, 2, false);
        for bound in [0.05, 0.3, 0.9, 2.0] {
            let fit =
                fit_constrained(&x, &y, &w, Link::Identity, bound, FitOptions::default()).unwrap();
            assert!(
                fit.l1_norm <= bound + 1e-8,
                "norm {} exceeds bound {bound}",
                fit.l1_norm
            );
            let recomputed =
                fit.intercept.abs() + fit.coefficients.iter().map(|b| b.abs()).sum::<f64>();
            assert_abs_diff_eq!(fit.l1_norm, recomputed, epsilon = 1e-12);
        }
    }

    #[test]
    fn active_bound_is_nearly_tight() {
        let (x, y, w) = random_instance(40, 6, 3, false);
        let loose =
            fit_constrained(&x, &y, &w, Link::Identity, 1e6, FitOptions::default()).unwrap();
        let bound = 0.5 * loose.l1_norm;
        let fit =
            fit_constrained(&x, &y, &w, Link::Identity, bound, FitOptions::default()).unwrap();
        assert!(fit.l1_norm <= bound + 1e-8);
        assert!(fit.l1_norm > bound * (1.0 - 1e-6), "active bound should bind: {}", fit.l1_norm);
    }

    #[test]
    fn kkt_certificate_identity_link() {
        let (x, y, w) = random_instance(40, 6, 4, false);
        let bound = 0.4;
        let fit =
            fit_constrained(&x, &y, &w, Link::Identity, bound, FitOptions::default()).unwrap();
        let n_inv = 1.0 / x.rows() as f64;
        // Residuals at the solution.
        let eta = fit.linear_predictor_design(&x);
        let resid: Vec<f64> = y.iter().zip(&eta).map(|(yi, ei)| yi - ei).collect();
        let mu = fit.penalty;
        // Gradient of the smooth part wrt coordinate j is −(1/n)Σ w x r.
        for j in 0..x.cols() {
            let g: f64 =
                x.col(j).iter().zip(&w).zip(&resid).map(|((xi, wi), ri)| wi * xi * ri).sum::<f64>()
                    * n_inv;
            let b = fit.coefficients[j];
            if b != 0.0 {
                assert_abs_diff_eq!(g, mu * b.signum(), epsilon = 1e-6);
            } else {
                assert!(g.abs() <= mu + 1e-6, "inactive coordinate {j} violates KKT: {g}");
            }
        }
        let g0: f64 = w.iter().zip(&resid).map(|(wi, ri)| wi * ri).sum::<f64>() * n_inv;
        if fit.intercept != 0.0 {
            assert_abs_diff_eq!(g0, mu * fit.intercept.signum(), epsilon = 1e-6);
        } else {
            assert!(g0.abs() <= mu + 1e-6);
        }
    }

    #[test]
    fn path_losses_nonincreasing_and_warm_start_consistent() {
        let (x, y, w) = random_instance(50, 6, 5, false);
        let bounds = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0];
        let path = lasso_path(&x, &y, &w, Link::Identity, &bounds, FitOptions::default()).unwrap();
        assert_eq!(path.len(), bounds.len());
        for pair in path.windows(2) {
            assert!(
                pair[1].loss <= pair[0].loss + 1e-9,
                "loss must not increase along the path: {} -> {}",
                pair[0].loss,
                pair[1].loss
            );
        }
        // First fit is the all-zero fit.
        assert_eq!(path[0].l1_norm, 0.0);
        // Each path element matches an independent cold fit.
        for (fit, &bound) in path.iter().zip(&bounds) {
            let cold =
                fit_constrained(&x, &y, &w, Link::Identity, bound, FitOptions::default()).unwrap();
            assert_abs_diff_eq!(fit.loss, cold.loss, epsilon = 1e-7);
        }
    }

    #[test]
    fn logit_zero_bound_predicts_one_half() {
        let (x, y, w) = random_instance(60, 4, 6, true);
        let fit = fit_constrained(&x, &y, &w, Link::Logit, 0.0, FitOptions::default()).unwrap();
        let preds = fit.predict_design(&x);
        assert!(preds.iter().all(|p| (*p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn logit_intercept_only_matches_weighted_mean() {
        // With a huge bound and no informative columns (all-zero design),
        // the logit fit reduces to the weighted mean on the probability
        // scale.
        let x = ColMatrix::zeros(8, 1);
        let y = vec![1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let w = vec![1.0, 2.0, 1.0, 1.0, 0.5, 1.0, 1.0, 0.5];
        let fit = fit_constrained(&x, &y, &w, Link::Logit, 50.0, FitOptions::default()).unwrap();
        let wmean = y.iter().zip(&w).map(|(yi, wi)| yi * wi).sum::<f64>()
            / w.iter().sum::<f64>();
        assert_abs_diff_eq!(fit.response(fit.intercept), wmean, epsilon = 1e-6);
    }

    #[test]
    fn logit_predictions_stay_strictly_inside_unit_interval() {
        // Perfectly separated outcome pushes the unconstrained fit to ±∞;
        // the cap must keep predictions inside (0,1).
        let x = ColMatrix::from_columns(6, 1, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let w = vec![1.0; 6];
        let fit = fit_constrained(&x, &y, &w, Link::Logit, 1e4, FitOptions::default()).unwrap();
        let preds = fit.predict_design(&x);
        assert!(preds.iter().all(|p| *p > 0.0 && *p < 1.0));
    }

    #[test]
    fn zero_weight_rows_are_ignored() {
        let (x, y, mut w) = random_instance(30, 3, 7, false);
        // Fit with the second half masked...
        for wi in w.iter_mut().skip(15) {
            *wi = 0.0;
        }
        let masked =
            fit_constrained(&x, &y, &w, Link::Identity, 0.8, FitOptions::default()).unwrap();
        // ...and compare against fitting the first half alone.
        let mut cols_half = vec![0.0; 15 * 3];
        for j in 0..3 {
            cols_half[j * 15..(j + 1) * 15].copy_from_slice(&x.col(j)[..15]);
        }
        let x_half = ColMatrix::from_columns(15, 3, cols_half);
        // Masked rows shrink (1/n)Σ: compensate by scaling weights to keep
        // the same per-row contribution as the full-length masked fit.
        let w_half = vec![0.5; 15];
        let direct = fit_constrained(&x_half, &y[..15], &w_half, Link::Identity, 0.8,
            FitOptions::default())
        .unwrap();
        assert_abs_diff_eq!(masked.intercept, direct.intercept, epsilon = 1e-6);
        for (a, b) in masked.coefficients.iter().zip(&direct.coefficients) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let (x, y, w) = random_instance(10, 2, 8, false);
        assert!(fit_constrained(&x, &y, &w, Link::Identity, -1.0, FitOptions::default()).is_err());
        assert!(fit_constrained(&x, &y[..5], &w, Link::Identity, 1.0, FitOptions::default())
            .is_err());
        let zero_w = vec![0.0; 10];
        assert!(
            fit_constrained(&x, &y, &zero_w, Link::Identity, 1.0, FitOptions::default()).is_err()
        );
        let mut bad_w = w.clone();
        bad_w[0] = -0.5;
        assert!(
            fit_constrained(&x, &y, &bad_w, Link::Identity, 1.0, FitOptions::default()).is_err()
        );
        // Logit outcomes outside [0,1].
        let y_bad = vec![2.0; 10];
        assert!(
            fit_constrained(&x, &y_bad, &w, Link::Logit, 1.0, FitOptions::default()).is_err()
        );
        // Non-monotone path.
        assert!(
            lasso_path(&x, &y, &w, Link::Identity, &[1.0, 1.0], FitOptions::default()).is_err()
        );
    }
}
