//! Indicator basis enumeration over observed support points.
//!
//! The function class is spanned by tensor indicators anchored at observed
//! covariate values: for a subset `s` of coordinates and a knot vector `τ`
//! taken from the data, the zero-order basis function is
//!
//! ```text
//! φ_{s,τ}(x) = ∏_{j ∈ s} I(x_j ≥ τ_j)
//! ```
//!
//! with a closed left endpoint (`x_j = τ_j` counts as inside). A
//! [`KnotPolicy`] optionally augments each indicator with per-coordinate
//! polynomial factors `(x_j − τ_j)^d` (degrees up to 2), and optionally
//! subsamples knots to a per-dimension quantile grid to bound the basis
//! cardinality on large data.
//!
//! Enumeration is deterministic: subsets ordered by size then
//! lexicographically, knots within a subset by first appearance in row order,
//! and polynomial degrees ascending. Entries whose evaluated column is
//! constant over the enumeration points (the intercept already spans those)
//! or bitwise identical to an earlier entry's column are dropped, so the
//! returned basis never carries redundant coordinates into the solver.

use std::collections::HashSet;
use std::sync::Arc;

use crate::data::{ColMatrix, Dataset};
use crate::error::{Error, Result};

/// Controls basis cardinality and smoothness augmentation.
#[derive(Debug, Clone, Copy)]
pub struct KnotPolicy {
    /// Per-dimension knot budget. Values beyond the budget are snapped to a
    /// quantile grid of this size (grid points are observed order
    /// statistics). `usize::MAX` keeps every observed value.
    pub max_knots_per_dim: usize,
    /// Highest polynomial degree multiplied onto each indicator; degrees
    /// `0..=max_degree` are all included. 0 gives plain indicators.
    pub max_degree: u8,
}

impl Default for KnotPolicy {
    fn default() -> Self {
        KnotPolicy { max_knots_per_dim: usize::MAX, max_degree: 0 }
    }
}

impl KnotPolicy {
    /// Plain indicators with all observed knots.
    pub fn plain() -> Self {
        Self::default()
    }

    /// Quantile-binned knots with polynomial augmentation, the configuration
    /// used by the simulation harness.
    pub fn binned(max_knots_per_dim: usize, max_degree: u8) -> Self {
        KnotPolicy { max_knots_per_dim, max_degree }
    }
}

/// One basis function: a coordinate subset, a knot vector, and a degree.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEntry {
    /// Ambient covariate indices, strictly ascending.
    pub coords: Vec<usize>,
    /// Knot values, aligned with `coords`.
    pub knots: Vec<f64>,
    /// Per-coordinate polynomial degree multiplied onto the indicator.
    pub degree: u8,
}

impl BasisEntry {
    /// Evaluates the basis function at a full covariate vector.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut value = 1.0;
        for (&c, &tau) in self.coords.iter().zip(&self.knots) {
            let xc = x[c];
            if xc < tau {
                return 0.0;
            }
            for _ in 0..self.degree {
                value *= xc - tau;
            }
        }
        value
    }
}

/// An enumerated basis over a covariate subset of a dataset.
#[derive(Debug, Clone)]
pub struct HalBasis {
    entries: Vec<BasisEntry>,
    /// Ambient covariate dimension expected by `eval`/`design`.
    dim: usize,
}

impl HalBasis {
    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ambient covariate dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates every basis function at `x`, writing into `out`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] if `x` or `out` have the wrong length.
    pub fn evaluate(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "basis expects {} covariates, got {}",
                self.dim,
                x.len()
            )));
        }
        if out.len() != self.entries.len() {
            return Err(Error::invalid("output buffer length must equal basis size"));
        }
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = e.eval(x);
        }
        Ok(())
    }

    /// Builds the design matrix (rows × basis size) for row-major points.
    pub fn design(&self, rows: &[f64], n: usize) -> Result<ColMatrix> {
        if rows.len() != n * self.dim {
            return Err(Error::invalid(format!(
                "point buffer has {} entries, expected {n} x {}",
                rows.len(),
                self.dim
            )));
        }
        let mut m = ColMatrix::zeros(n, self.entries.len());
        for (j, e) in self.entries.iter().enumerate() {
            let col = m.col_mut(j);
            for (i, cj) in col.iter_mut().enumerate() {
                *cj = e.eval(&rows[i * self.dim..(i + 1) * self.dim]);
            }
        }
        Ok(m)
    }

    /// Design matrix over the covariate rows of a dataset.
    pub fn design_from_dataset(&self, data: &Dataset) -> Result<ColMatrix> {
        if data.n_covariates() != self.dim {
            return Err(Error::invalid("dataset dimension does not match basis"));
        }
        let n = data.n();
        let mut m = ColMatrix::zeros(n, self.entries.len());
        for (j, e) in self.entries.iter().enumerate() {
            let col = m.col_mut(j);
            for (i, cj) in col.iter_mut().enumerate() {
                *cj = e.eval(data.row(i));
            }
        }
        Ok(m)
    }
}

/// Snapping grid: sorted observed order statistics, at most `q` of them.
fn quantile_grid(mut values: Vec<f64>, q: usize) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let m = values.len();
    if m <= q || q == 0 {
        return values;
    }
    if q == 1 {
        return vec![values[0]];
    }
    let mut grid: Vec<f64> = (0..q).map(|k| values[k * (m - 1) / (q - 1)]).collect();
    grid.dedup();
    grid
}

/// Nearest grid value (ties resolved toward the smaller value).
fn snap(grid: &[f64], x: f64) -> f64 {
    match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => grid[i],
        Err(0) => grid[0],
        Err(i) if i == grid.len() => grid[i - 1],
        Err(i) => {
            let (lo, hi) = (grid[i - 1], grid[i]);
            if x - lo <= hi - x {
                lo
            } else {
                hi
            }
        }
    }
}

/// Enumerates all subset/knot basis functions over arbitrary points.
///
/// `points` is row-major with `n` rows of dimension `dim`; `selected` are the
/// coordinates eligible to appear in subsets.
///
/// # Arguments
///
/// * `points` - row-major point buffer (`n × dim`).
/// * `selected` - ambient coordinate indices the basis may use.
/// * `max_order` - largest subset size |s| to enumerate.
/// * `policy` - knot budget and polynomial augmentation.
///
/// # Errors
///
/// [`Error::InvalidInput`] on an empty point set, out-of-range coordinate
/// indices, duplicate selections, or `max_order` exceeding the selection.
pub fn enumerate_basis_points(
    points: &[f64],
    n: usize,
    dim: usize,
    selected: &[usize],
    max_order: usize,
    policy: KnotPolicy,
) -> Result<HalBasis> {
    if n == 0 || points.len() != n * dim {
        return Err(Error::invalid("basis enumeration needs a nonempty point set"));
    }
    if selected.is_empty() {
        return Err(Error::invalid("at least one covariate must be selected"));
    }
    let mut seen_sel = vec![false; dim];
    for &c in selected {
        if c >= dim {
            return Err(Error::invalid(format!("selected coordinate {c} out of range")));
        }
        if seen_sel[c] {
            return Err(Error::invalid(format!("coordinate {c} selected twice")));
        }
        seen_sel[c] = true;
    }
    if max_order == 0 || max_order > selected.len() {
        return Err(Error::invalid(format!(
            "max_order must lie in 1..={}, got {max_order}",
            selected.len()
        )));
    }
    if policy.max_degree > 2 {
        return Err(Error::invalid("polynomial augmentation supports degrees 0..=2"));
    }

    // Per selected coordinate: the snapping grid (observed order statistics).
    let mut grid_idx: Vec<Option<usize>> = vec![None; dim];
    let mut grids: Vec<Vec<f64>> = Vec::with_capacity(selected.len());
    for &c in selected {
        let col: Vec<f64> = (0..n).map(|i| points[i * dim + c]).collect();
        grid_idx[c] = Some(grids.len());
        grids.push(quantile_grid(col, policy.max_knots_per_dim));
    }

    // Subsets of the selection, by size then lexicographic order.
    let mut sorted_sel: Vec<usize> = selected.to_vec();
    sorted_sel.sort_unstable();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for size in 1..=max_order {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            subsets.push(idx.iter().map(|&k| sorted_sel[k]).collect());
            // Next combination of `size` positions out of sorted_sel.
            let mut k = size;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                if idx[k] != k + sorted_sel.len() - size {
                    idx[k] += 1;
                    for j in k + 1..size {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if k == 0 {
                    idx.clear();
                    break;
                }
            }
            if idx.is_empty() {
                break;
            }
        }
    }

    let grid_of = |c: usize| &grids[grid_idx[c].expect("subset coordinate is selected")];

    let mut entries: Vec<BasisEntry> = Vec::new();
    let mut knot_buf: Vec<f64> = Vec::new();
    for s in &subsets {
        // Knots = snapped observed rows, deduplicated in first-appearance
        // order (row order makes the enumeration deterministic).
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut knots: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            knot_buf.clear();
            for &c in s {
                knot_buf.push(snap(grid_of(c), points[i * dim + c]));
            }
            let key: Vec<u64> = knot_buf.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                knots.push(knot_buf.clone());
            }
        }
        for knot in knots {
            for degree in 0..=policy.max_degree {
                entries.push(BasisEntry { coords: s.clone(), knots: knot.clone(), degree });
            }
        }
    }

    // Functions that coincide on the observed points are indistinguishable
    // to the fit and leave the L1 optimum non-unique (the solver then chases
    // flat directions instead of converging), so drop columns constant over
    // the data — the intercept spans them — and exact duplicates of an
    // earlier column, keeping first occurrences in enumeration order.
    let mut kept: Vec<BasisEntry> = Vec::with_capacity(entries.len());
    let mut seen_cols: HashSet<Vec<u64>> = HashSet::new();
    let mut col = vec![0.0; n];
    for e in entries {
        for (i, c) in col.iter_mut().enumerate() {
            *c = e.eval(&points[i * dim..(i + 1) * dim]);
        }
        if col.iter().all(|&v| v == col[0]) {
            continue;
        }
        let key: Vec<u64> = col.iter().map(|v| v.to_bits()).collect();
        if seen_cols.insert(key) {
            kept.push(e);
        }
    }

    Ok(HalBasis { entries: kept, dim })
}

/// Enumerates the basis over a dataset's covariate rows.
///
/// See [`enumerate_basis_points`] for the contract; `selected` indexes the
/// dataset's covariate columns.
pub fn enumerate_basis(
    data: &Dataset,
    selected: &[usize],
    max_order: usize,
    policy: KnotPolicy,
) -> Result<Arc<HalBasis>> {
    let n = data.n();
    let d = data.n_covariates();
    let mut rows = Vec::with_capacity(n * d);
    for i in 0..n {
        rows.extend_from_slice(data.row(i));
    }
    enumerate_basis_points(&rows, n, d, selected, max_order, policy).map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(rows: &[&[f64]]) -> (Vec<f64>, usize, usize) {
        let n = rows.len();
        let d = rows[0].len();
        let mut buf = Vec::with_capacity(n * d);
        for r in rows {
            buf.extend_from_slice(r);
        }
        (buf, n, d)
    }

    #[test]
    fn one_covariate_two_values_one_nonredundant_indicator() {
        let (buf, n, d) = points(&[&[0.3], &[0.7]]);
        let b =
            enumerate_basis_points(&buf, n, d, &[0], 1, KnotPolicy::plain()).unwrap();
        // I(x ≥ 0.3) is constant over the points (the intercept's job), so
        // only the upper indicator survives.
        assert_eq!(b.len(), 1);
        assert_eq!(b.entries()[0].knots, vec![0.7]);
        // Closed left endpoint: evaluation at the knot itself is 1.
        let mut out = [0.0; 1];
        b.evaluate(&[0.3], &mut out).unwrap();
        assert_eq!(out, [0.0]);
        b.evaluate(&[0.7], &mut out).unwrap();
        assert_eq!(out, [1.0]);
    }

    #[test]
    fn saturated_two_by_two_keeps_mains_and_product() {
        let (buf, n, d) = points(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let b =
            enumerate_basis_points(&buf, n, d, &[0, 1], 2, KnotPolicy::plain()).unwrap();
        // Exactly I(x≥1), I(y≥1), and their genuinely new product survive;
        // minimum-knot indicators and duplicated pair cells are dropped.
        assert_eq!(b.len(), 3);
        assert_eq!(b.entries()[0].coords, vec![0]);
        assert_eq!(b.entries()[0].knots, vec![1.0]);
        assert_eq!(b.entries()[1].coords, vec![1]);
        assert_eq!(b.entries()[1].knots, vec![1.0]);
        assert_eq!(b.entries()[2].coords, vec![0, 1]);
        assert_eq!(b.entries()[2].knots, vec![1.0, 1.0]);
    }

    #[test]
    fn perfectly_collinear_covariates_collapse_to_first_copies() {
        let (buf, n, d) = points(&[&[0.1, 1.0], &[0.2, 2.0], &[0.3, 3.0]]);
        let b =
            enumerate_basis_points(&buf, n, d, &[0, 1], 2, KnotPolicy::plain()).unwrap();
        // The second coordinate and the pair replicate coordinate 0's
        // columns exactly, so only coordinate 0's two step functions remain.
        assert_eq!(b.len(), 2);
        assert!(b.entries().iter().all(|e| e.coords == vec![0]));
        assert_eq!(b.entries()[0].knots, vec![0.2]);
        assert_eq!(b.entries()[1].knots, vec![0.3]);
    }

    #[test]
    fn interaction_requires_every_coordinate_at_or_above_knot() {
        let e = BasisEntry { coords: vec![0, 1], knots: vec![0.3, 0.9], degree: 0 };
        assert_eq!(e.eval(&[0.5, 0.5]), 0.0);
        assert_eq!(e.eval(&[0.5, 0.9]), 1.0);
    }

    #[test]
    fn all_minimum_knots_give_all_ones() {
        let (buf, n, d) = points(&[&[0.0, -1.0], &[0.5, 0.0], &[1.0, 1.0]]);
        let b =
            enumerate_basis_points(&buf, n, d, &[0, 1], 2, KnotPolicy::plain()).unwrap();
        let mut out = vec![0.0; b.len()];
        b.evaluate(&[1.0, 1.0], &mut out).unwrap();
        assert!(out.iter().all(|&v| v == 1.0), "max point activates every indicator");
    }

    #[test]
    fn degree_augmentation_multiplies_hinge_factors() {
        let (buf, n, d) = points(&[&[0.0], &[0.5]]);
        let policy = KnotPolicy::binned(usize::MAX, 2);
        let b = enumerate_basis_points(&buf, n, d, &[0], 1, policy).unwrap();
        // Knot 0.0 keeps its ramp and square (the plain indicator is
        // constant); knot 0.5 keeps only the plain indicator (its hinge
        // factors vanish on both points).
        assert_eq!(b.len(), 3);
        assert_eq!(
            b.entries().iter().map(|e| e.degree).collect::<Vec<_>>(),
            vec![1, 2, 0]
        );
        let mut out = vec![0.0; 3];
        b.evaluate(&[0.75], &mut out).unwrap();
        // Knot 0.0: 0.75, 0.5625; knot 0.5: 1.
        assert_eq!(out, vec![0.75, 0.5625, 1.0]);
    }

    #[test]
    fn quantile_binning_caps_knot_count() {
        let vals: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let buf: Vec<f64> = vals.clone();
        let policy = KnotPolicy::binned(5, 0);
        let b = enumerate_basis_points(&buf, 100, 1, &[0], 1, policy).unwrap();
        // Five grid points, minus the constant minimum-knot indicator.
        assert_eq!(b.len(), 4);
        assert!(b.entries()[0].knots[0] > 0.0);
        // Grid points are observed order statistics, including the max.
        assert!(b.entries().iter().any(|e| e.knots[0] == 1.0));
    }

    #[test]
    fn binary_covariate_contributes_one_indicator_under_binning() {
        let buf: Vec<f64> = (0..50).map(|i| (i % 2) as f64).collect();
        let policy = KnotPolicy::binned(12, 0);
        let b = enumerate_basis_points(&buf, 50, 1, &[0], 1, policy).unwrap();
        // I(x ≥ 0) is constant; I(x ≥ 1) carries the information.
        assert_eq!(b.len(), 1);
        assert_eq!(b.entries()[0].knots, vec![1.0]);
    }

    #[test]
    fn deterministic_enumeration() {
        let (buf, n, d) = points(&[&[0.3, 1.0], &[0.1, 0.5], &[0.3, 0.2]]);
        let a = enumerate_basis_points(&buf, n, d, &[0, 1], 2, KnotPolicy::plain()).unwrap();
        let b = enumerate_basis_points(&buf, n, d, &[0, 1], 2, KnotPolicy::plain()).unwrap();
        assert_eq!(a.entries(), b.entries());
        // Coordinate 0's surviving knot appears first (first-row order);
        // its minimum knot 0.1 is constant and dropped, and every pair cell
        // duplicates a main effect on these three rows.
        assert_eq!(a.entries()[0].knots, vec![0.3]);
        assert_eq!(a.entries().iter().filter(|e| e.coords == vec![0]).count(), 1);
        assert_eq!(a.entries().iter().filter(|e| e.coords == vec![1]).count(), 2);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (buf, n, d) = points(&[&[0.1, 0.2]]);
        assert!(enumerate_basis_points(&[], 0, 1, &[0], 1, KnotPolicy::plain()).is_err());
        assert!(enumerate_basis_points(&buf, n, d, &[], 1, KnotPolicy::plain()).is_err());
        assert!(enumerate_basis_points(&buf, n, d, &[2], 1, KnotPolicy::plain()).is_err());
        assert!(enumerate_basis_points(&buf, n, d, &[0, 0], 1, KnotPolicy::plain()).is_err());
        assert!(enumerate_basis_points(&buf, n, d, &[0], 3, KnotPolicy::plain()).is_err());
        let b = enumerate_basis_points(&buf, n, d, &[0, 1], 1, KnotPolicy::plain()).unwrap();
        let mut out = vec![0.0; b.len()];
        assert!(b.evaluate(&[0.1], &mut out).is_err(), "dimension mismatch must error");
    }
}
