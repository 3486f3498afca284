//! Linear treatment rules d(s) = I(sᵀθ > 0) and grid search over the rule
//! index θ.
//!
//! Rules are indexed by a direction vector θ: a subject with rule
//! covariates s is assigned the treated arm exactly when sᵀθ is strictly
//! positive (ties go to control). The decision is invariant to positive
//! rescaling of θ, so candidate directions are normalized to the unit
//! sphere; θ and −θ encode *different* rules (complementary up to the
//! boundary) and both hemispheres stay in play when searching.
//!
//! The rule index is chosen by exhaustive search over a finite grid of
//! directions, maximizing a caller-supplied curve evaluator (typically the
//! smoothed counterfactual survival estimate at a fixed stratum value).
//! Grid search is exact on the grid and mirrors how the response-surface
//! fit pools pseudo-observations across the same grid.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::Dataset;

/// A finite set of candidate rule directions with mixing weights.
///
/// The weights describe how pseudo-observations are allocated across
/// directions when pooling (uniform by default); they are strictly
/// positive and sum to one.
#[derive(Debug, Clone)]
pub struct ThetaGrid {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ThetaGrid {
    /// Builds a grid from explicit points and weights.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] when the grid is empty, dimensions are
    /// ragged, a weight is nonpositive, the weights don't sum to one
    /// (within 1e-10), or two points coincide after unit normalization.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("theta grid must be nonempty"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} grid points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let q = points[0].len();
        let mut normalized = Vec::with_capacity(points.len());
        for point in &points {
            if point.len() != q {
                return Err(Error::invalid("theta grid points must share one dimension"));
            }
            normalized.push(normalize_theta(point)?);
        }
        for i in 0..normalized.len() {
            for j in (i + 1)..normalized.len() {
                let dist: f64 = normalized[i]
                    .iter()
                    .zip(&normalized[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if dist.sqrt() < 1e-12 {
                    return Err(Error::invalid(format!(
                        "grid points {i} and {j} coincide after normalization"
                    )));
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("weights must be positive and sum to one"));
        }
        Ok(ThetaGrid { points: normalized, weights })
    }

    /// Builds a uniformly weighted grid.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        if m == 0 {
            return Err(Error::invalid("theta grid must be nonempty"));
        }
        ThetaGrid::new(points, vec![1.0 / m as f64; m])
    }

    /// Grid size.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether the grid is empty (never true for a constructed grid).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rule dimension q.
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// The normalized direction at index `k`.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k]
    }

    /// All normalized directions.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// The mixing weight of direction `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }
}

/// Scales θ to unit Euclidean norm (positive scaling only; the sign
/// pattern is preserved because θ and −θ are different rules).
///
/// # Errors
///
/// [`Error::InvalidInput`] on an all-zero or non-finite vector.
pub fn normalize_theta(theta: &[f64]) -> Result<Vec<f64>> {
    if theta.is_empty() || theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("theta must be nonempty and finite"));
    }
    let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("theta must have a nonzero coordinate"));
    }
    Ok(theta.iter().map(|v| v / norm).collect())
}

/// Evenly spaced directions around the full unit circle (q = 2).
///
/// # Errors
///
/// [`Error::InvalidInput`] when `m` is zero.
pub fn unit_circle_grid(m: usize) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::invalid("circle grid needs at least one direction"));
    }
    let mut points = Vec::with_capacity(m);
    for k in 0..m {
        let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        points.push(vec![phi.cos(), phi.sin()]);
    }
    Ok(points)
}

/// The rule's arm for one subject: 1 iff sᵀθ > 0 (strict; boundary → 0).
///
/// # Errors
///
/// [`Error::InvalidInput`] on a dimension mismatch.
pub fn decision(theta: &[f64], s: &[f64]) -> Result<u8> {
    if theta.len() != s.len() {
        return Err(Error::invalid(format!(
            "rule has dimension {}, covariates have {}",
            theta.len(),
            s.len()
        )));
    }
    let score: f64 = theta.iter().zip(s).map(|(t, v)| t * v).sum();
    Ok(u8::from(score > 0.0))
}

/// The rule's arm for every row of a dataset (using its S columns).
///
/// # Errors
///
/// [`Error::InvalidInput`] when θ's dimension differs from the dataset's
/// rule-covariate count.
pub fn rule_arms(data: &Dataset, theta: &[f64]) -> Result<Vec<u8>> {
    let q = data.s_cols().len();
    if theta.len() != q {
        return Err(Error::invalid(format!(
            "rule has dimension {}, dataset declares {q} rule covariates",
            theta.len()
        )));
    }
    let mut s = vec![0.0; q];
    let mut arms = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        data.s_vector(i, &mut s);
        arms.push(decision(theta, &s)?);
    }
    Ok(arms)
}

/// Exhaustive maximization of a curve evaluator over the grid.
///
/// Directions whose evaluation fails are skipped (recorded in the return's
/// `failures`); ties break toward the smallest grid index.
///
/// # Errors
///
/// [`Error::NoFeasibleTheta`] when every evaluation fails.
pub fn optimize_theta<F>(grid: &ThetaGrid, mut evaluate: F) -> Result<ThetaChoice>
where
    F: FnMut(usize, &[f64]) -> Result<f64>,
{
    let mut best: Option<(usize, f64)> = None;
    let mut failures = Vec::new();
    for k in 0..grid.len() {
        match evaluate(k, grid.point(k)) {
            Ok(value) if value.is_finite() => {
                if best.map(|(_, v)| value > v).unwrap_or(true) {
                    best = Some((k, value));
                }
            }
            Ok(_) => failures.push((k, "non-finite curve value".to_string())),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    match best {
        Some((index, value)) => Ok(ThetaChoice {
            index,
            theta: grid.point(index).to_vec(),
            value,
            failures,
        }),
        None => Err(Error::NoFeasibleTheta(format!(
            "all {} grid evaluations failed (first: {})",
            grid.len(),
            failures.first().map(|(_, m)| m.as_str()).unwrap_or("none")
        ))),
    }
}

/// The grid maximizer and its achieved value.
#[derive(Debug, Clone)]
pub struct ThetaChoice {
    /// Index of the winning direction in the grid.
    pub index: usize,
    /// The winning (normalized) direction.
    pub theta: Vec<f64>,
    /// The curve value it achieved.
    pub value: f64,
    /// Directions whose evaluation failed, with reasons.
    pub failures: Vec<(usize, String)>,
}

/// Descriptive summary of a rule on a sample.
#[derive(Debug, Clone, Copy)]
pub struct RuleReport {
    /// Fraction of all rows the rule assigns to the treated arm.
    pub fraction_treated: f64,
    /// Among rows with positive kernel weight at the evaluation point,
    /// the fraction whose observed arm agrees with the rule.
    pub kernel_local_agreement: f64,
    /// Count of rows with positive kernel weight.
    pub kernel_local_rows: usize,
}

/// Summarizes how a rule treats a sample near the evaluation point.
///
/// # Errors
///
/// [`Error::InvalidInput`] on dimension mismatches between θ, the
/// dataset's rule covariates, or the kernel's stratum dimension.
pub fn rule_report(theta: &[f64], data: &Dataset, kernel: &KernelSpec) -> Result<RuleReport> {
    if kernel.dim() != data.v_cols().len() {
        return Err(Error::invalid(format!(
            "kernel centered in dimension {}, dataset has {} stratum columns",
            kernel.dim(),
            data.v_cols().len()
        )));
    }
    let arms = rule_arms(data, theta)?;
    let n = data.n();
    let mut treated = 0usize;
    let mut local = 0usize;
    let mut agree = 0usize;
    let mut v = vec![0.0; kernel.dim()];
    for (i, &arm) in arms.iter().enumerate() {
        treated += arm as usize;
        data.v_vector(i, &mut v);
        if kernel.weight(&v) > 0.0 {
            local += 1;
            if arm == data.a()[i] {
                agree += 1;
            }
        }
    }
    Ok(RuleReport {
        fraction_treated: treated as f64 / n as f64,
        kernel_local_agreement: if local == 0 { 0.0 } else { agree as f64 / local as f64 },
        kernel_local_rows: local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;
    use approx::assert_abs_diff_eq;

    fn toy_dataset() -> Dataset {
        // Columns: s1, v; both roles share nothing, s = col 0, v = col 1.
        let y = vec![1.0, 0.0, 1.0, 1.0];
        let delta = vec![1, 1, 1, 1];
        let a = vec![1, 0, 0, 0];
        let x = vec![0.5, 0.1, -0.5, 0.2, 0.8, 0.45, -0.1, 0.9];
        Dataset::new(y, delta, a, x, vec!["s1".into(), "v".into()], vec![0], vec![1]).unwrap()
    }

    #[test]
    fn decision_is_strict_at_the_boundary() {
        assert_eq!(decision(&[1.0], &[0.5]).unwrap(), 1);
        assert_eq!(decision(&[1.0, -1.0], &[0.3, 0.3]).unwrap(), 0);
        assert_eq!(decision(&[1.0, -1.0], &[0.4, 0.3]).unwrap(), 1);
    }

    #[test]
    fn decision_is_invariant_to_positive_scaling() {
        let s = [0.7, -0.2, 0.1];
        for c in [0.001, 1.0, 250.0] {
            let theta = [0.5, 1.5, -0.3];
            let scaled: Vec<f64> = theta.iter().map(|t| t * c).collect();
            assert_eq!(decision(&theta, &s).unwrap(), decision(&scaled, &s).unwrap());
        }
    }

    #[test]
    fn negating_theta_flips_interior_decisions() {
        let s = [0.7, -0.2];
        let theta = [0.5, 1.5];
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        assert_ne!(decision(&theta, &s).unwrap(), decision(&neg, &s).unwrap());
    }

    #[test]
    fn normalization_rejects_zero_and_keeps_direction() {
        assert!(normalize_theta(&[0.0, 0.0]).is_err());
        let n = normalize_theta(&[3.0, -4.0]).unwrap();
        assert_abs_diff_eq!(n[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(n[1], -0.8, epsilon = 1e-15);
    }

    #[test]
    fn circle_grid_covers_both_hemispheres_distinctly() {
        let points = unit_circle_grid(8).unwrap();
        let grid = ThetaGrid::uniform(points).unwrap();
        assert_eq!(grid.len(), 8);
        // (0, -1) is on the 8-point grid (phi = -pi/2).
        assert!(grid
            .points()
            .iter()
            .any(|p| (p[0]).abs() < 1e-12 && (p[1] + 1.0).abs() < 1e-12));
        // Every direction's negation is also on the full-circle grid.
        for p in grid.points() {
            let neg = [-p[0], -p[1]];
            assert!(grid
                .points()
                .iter()
                .any(|q| (q[0] - neg[0]).abs() < 1e-9 && (q[1] - neg[1]).abs() < 1e-9));
        }
    }

    #[test]
    fn grid_rejects_duplicates_after_normalization() {
        let points = vec![vec![1.0, 0.0], vec![2.0, 0.0]];
        assert!(ThetaGrid::uniform(points).is_err());
    }

    #[test]
    fn optimizer_prefers_smallest_index_on_ties() {
        let grid = ThetaGrid::uniform(unit_circle_grid(6).unwrap()).unwrap();
        let choice = optimize_theta(&grid, |_, _| Ok(1.0)).unwrap();
        assert_eq!(choice.index, 0);
        assert_abs_diff_eq!(choice.value, 1.0, epsilon = 0.0);
    }

    #[test]
    fn optimizer_finds_an_injected_maximizer() {
        let grid = ThetaGrid::uniform(unit_circle_grid(16).unwrap()).unwrap();
        let target = grid.point(11).to_vec();
        let choice = optimize_theta(&grid, |_, theta| {
            let dot: f64 = theta.iter().zip(&target).map(|(a, b)| a * b).sum();
            Ok(dot)
        })
        .unwrap();
        assert_eq!(choice.index, 11);
    }

    #[test]
    fn optimizer_skips_failures_and_errors_when_all_fail() {
        let grid = ThetaGrid::uniform(unit_circle_grid(4).unwrap()).unwrap();
        let choice = optimize_theta(&grid, |k, _| {
            if k == 2 {
                Ok(5.0)
            } else {
                Err(Error::invalid("boom"))
            }
        })
        .unwrap();
        assert_eq!(choice.index, 2);
        assert_eq!(choice.failures.len(), 3);

        let err = optimize_theta(&grid, |_, _| Err::<f64, _>(Error::invalid("boom")));
        assert!(matches!(err, Err(Error::NoFeasibleTheta(_))));
    }

    #[test]
    fn scaling_theta_leaves_every_sample_decision_unchanged() {
        let data = toy_dataset();
        let theta = [0.9];
        let doubled = [1.8];
        assert_eq!(rule_arms(&data, &theta).unwrap(), rule_arms(&data, &doubled).unwrap());
    }

    #[test]
    fn report_counts_treated_and_local_agreement() {
        let data = toy_dataset();
        // Treat when s1 > 0: rows 0 and 2.
        let kernel =
            KernelSpec::new(KernelFamily::Epanechnikov, vec![0.5], 0.5, 1).unwrap();
        let report = rule_report(&[1.0], &data, &kernel).unwrap();
        assert_abs_diff_eq!(report.fraction_treated, 0.5, epsilon = 1e-15);
        // Every v in {0.1, 0.2, 0.45, 0.9} lies strictly inside the kernel
        // support (0, 1). Rule arms 1,0,1,0 vs observed 1,0,0,0.
        assert_eq!(report.kernel_local_rows, 4);
        assert_abs_diff_eq!(report.kernel_local_agreement, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn opposite_rules_have_complementary_treatment_fractions() {
        let data = toy_dataset();
        let kernel =
            KernelSpec::new(KernelFamily::Epanechnikov, vec![0.5], 1.0, 1).unwrap();
        let plus = rule_report(&[1.0], &data, &kernel).unwrap();
        let minus = rule_report(&[-1.0], &data, &kernel).unwrap();
        // No row sits exactly on the boundary, so fractions sum to one.
        assert_abs_diff_eq!(plus.fraction_treated + minus.fraction_treated, 1.0, epsilon = 1e-15);
    }
}
