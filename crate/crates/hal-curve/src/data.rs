//! Observational survival data with treatment, censoring, and covariates.
//!
//! Each observation carries an outcome `y` (a time or a binary endpoint), a
//! censoring indicator `delta` (1 = event observed), a binary treatment `a`,
//! and a covariate vector. Two index sets name covariate roles:
//!
//! - `s_cols` — covariates the decision rule sees, in rule order;
//! - `v_cols` — covariates the response curve is localized on (the stratum).
//!
//! The sets must jointly cover every covariate; they may overlap (a rule is
//! free to use the stratum variables).

use crate::error::{Error, Result};

/// A column-oriented design/covariate matrix (rows × cols, column-major).
///
/// Column-major storage keeps coordinate-descent inner loops contiguous.
#[derive(Debug, Clone)]
pub struct ColMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl ColMatrix {
    /// Builds a matrix from column-major storage.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has wrong length");
        ColMatrix { data, rows, cols }
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_rows(rows: usize, cols: usize, row_major: &[f64]) -> Self {
        assert_eq!(row_major.len(), rows * cols, "row-major buffer has wrong length");
        let mut data = vec![0.0; rows * cols];
        for j in 0..cols {
            for i in 0..rows {
                data[j * rows + i] = row_major[i * cols + j];
            }
        }
        ColMatrix { data, rows, cols }
    }

    /// An all-zero matrix with the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ColMatrix { data: vec![0.0; rows * cols], rows, cols }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable column `j`.
    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }
}

/// An observational dataset for rule-response estimation.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    delta: Vec<u8>,
    a: Vec<u8>,
    /// Covariates, row-major (n × d).
    x: Vec<f64>,
    d: usize,
    names: Vec<String>,
    s_cols: Vec<usize>,
    v_cols: Vec<usize>,
}

impl Dataset {
    /// Assembles and validates a dataset.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] if lengths disagree, `delta`/`a` are not 0/1,
    /// any value is non-finite, the role sets reference unknown columns, or
    /// the role sets fail to cover every covariate.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        y: Vec<f64>,
        delta: Vec<u8>,
        a: Vec<u8>,
        x: Vec<f64>,
        names: Vec<String>,
        s_cols: Vec<usize>,
        v_cols: Vec<usize>,
    ) -> Result<Self> {
        let n = y.len();
        let d = names.len();
        if n == 0 {
            return Err(Error::invalid("dataset must contain at least one observation"));
        }
        if delta.len() != n || a.len() != n {
            return Err(Error::invalid(format!(
                "y, delta, a must share a length: got {n}, {}, {}",
                delta.len(),
                a.len()
            )));
        }
        if x.len() != n * d {
            return Err(Error::invalid(format!(
                "covariate buffer has {} entries, expected {n} x {d}",
                x.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("y and covariates must be finite"));
        }
        if delta.iter().any(|&v| v > 1) || a.iter().any(|&v| v > 1) {
            return Err(Error::invalid("delta and a must be 0/1 indicators"));
        }
        if s_cols.is_empty() || v_cols.is_empty() {
            return Err(Error::invalid("rule (s) and stratum (v) column sets must be non-empty"));
        }
        for &c in s_cols.iter().chain(v_cols.iter()) {
            if c >= d {
                return Err(Error::invalid(format!(
                    "role column index {c} out of range for {d} covariates"
                )));
            }
        }
        let mut covered = vec![false; d];
        for &c in s_cols.iter().chain(v_cols.iter()) {
            covered[c] = true;
        }
        if covered.iter().any(|&c| !c) {
            return Err(Error::invalid(
                "every covariate must belong to the rule set, the stratum set, or both",
            ));
        }
        Ok(Dataset { y, delta, a, x, d, names, s_cols, v_cols })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn n_covariates(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn delta(&self) -> &[u8] {
        &self.delta
    }

    #[inline]
    pub fn a(&self) -> &[u8] {
        &self.a
    }

    /// Covariate names, in column order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Rule-covariate column indices, in rule order.
    pub fn s_cols(&self) -> &[usize] {
        &self.s_cols
    }

    /// Stratum column indices, in stratum order.
    pub fn v_cols(&self) -> &[usize] {
        &self.v_cols
    }

    /// Covariate row `i` (all columns).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn covariate(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.d + j]
    }

    /// Copies the rule covariates S_i into `out` (length = s_cols).
    #[inline]
    pub fn s_vector(&self, i: usize, out: &mut [f64]) {
        for (k, &c) in self.s_cols.iter().enumerate() {
            out[k] = self.covariate(i, c);
        }
    }

    /// Copies the stratum covariates V_i into `out` (length = v_cols).
    #[inline]
    pub fn v_vector(&self, i: usize, out: &mut [f64]) {
        for (k, &c) in self.v_cols.iter().enumerate() {
            out[k] = self.covariate(i, c);
        }
    }

    /// Survival indicator I(y > t) for every row.
    pub fn surv_indicator(&self, t: f64) -> Vec<f64> {
        self.y.iter().map(|&y| if y > t { 1.0 } else { 0.0 }).collect()
    }

    /// Censoring-adjusted follow-up indicator Δᶜ = Δ + (1−Δ)·I(Y > t).
    ///
    /// An observation contributes at horizon `t` when its event was observed,
    /// or when it was censored but is known to survive past `t`.
    pub fn delta_c(&self, t: f64) -> Vec<u8> {
        self.y
            .iter()
            .zip(&self.delta)
            .map(|(&y, &d)| if d == 1 || y > t { 1 } else { 0 })
            .collect()
    }
}
