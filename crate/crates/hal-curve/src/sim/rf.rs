//! Bagged regression trees used as the comparison estimator for the
//! treatment and censoring mechanisms in the simulation study.
//!
//! Each tree is grown on a bootstrap resample with greedy best-SSE axis
//! splits over a fixed budget of candidate thresholds, depth-limited and
//! with a minimum leaf size; the forest prediction is the plain average
//! of its trees' leaf means. Everything is deterministic given the seed,
//! so simulation replications stay reproducible.

use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Number of candidate thresholds examined per feature at each node.
const SPLIT_CANDIDATES: usize = 32;

/// Forest shape parameters.
#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    /// Number of bootstrap trees.
    pub trees: usize,
    /// Maximum split depth (0 grows a single leaf).
    pub max_depth: usize,
    /// Smallest number of samples allowed on each side of a split.
    pub min_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { trees: 50, max_depth: 4, min_leaf: 10 }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, point: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(value) => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if point[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// A fitted bagged regression forest over `dim`-dimensional features.
#[derive(Debug, Clone)]
pub struct Forest {
    dim: usize,
    trees: Vec<Tree>,
}

impl Forest {
    /// Fits a forest to `n` rows stored row-major in `x` (`n * dim`
    /// entries) with responses `y`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] on empty data, mismatched lengths,
    /// non-finite entries, or a degenerate configuration.
    pub fn fit(
        x: &[f64],
        n: usize,
        dim: usize,
        y: &[f64],
        config: &ForestConfig,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("forest needs at least one row and one feature"));
        }
        if x.len() != n * dim || y.len() != n {
            return Err(Error::invalid(format!(
                "forest shape mismatch: {} feature values and {} responses for n={n}, dim={dim}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("forest inputs must be finite"));
        }
        if config.trees == 0 || config.min_leaf == 0 {
            return Err(Error::invalid("forest needs trees >= 1 and min_leaf >= 1"));
        }
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(config.trees);
        for _ in 0..config.trees {
            let tree_seed: u64 = master.random();
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut nodes = Vec::new();
            grow(x, dim, y, &rows, 0, config, &mut nodes);
            trees.push(Tree { nodes });
        }
        Ok(Self { dim, trees })
    }

    /// Average prediction of the trees at one feature point.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] when the point has the wrong dimension.
    pub fn predict(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::invalid(format!(
                "forest expects {} features, got {}",
                self.dim,
                point.len()
            )));
        }
        let total: f64 = self.trees.iter().map(|t| t.predict(point)).sum();
        Ok(total / self.trees.len() as f64)
    }
}

fn mean_of(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
}

/// Sum of squared deviations from the mean, via the shifted-moment form.
fn sse_of(y: &[f64], rows: &[usize]) -> f64 {
    let m = mean_of(y, rows);
    rows.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum()
}

/// Recursively grows a subtree over `rows`, returning its node index.
fn grow(
    x: &[f64],
    dim: usize,
    y: &[f64],
    rows: &[usize],
    depth: usize,
    config: &ForestConfig,
    nodes: &mut Vec<Node>,
) -> usize {
    let leaf = |nodes: &mut Vec<Node>| {
        nodes.push(Node::Leaf(mean_of(y, rows)));
        nodes.len() - 1
    };
    if depth >= config.max_depth || rows.len() < 2 * config.min_leaf {
        return leaf(nodes);
    }
    let parent_sse = sse_of(y, rows);
    if parent_sse <= 0.0 {
        return leaf(nodes);
    }
    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, child sse)
    let mut values = Vec::with_capacity(rows.len());
    for feature in 0..dim {
        values.clear();
        values.extend(rows.iter().map(|&i| x[i * dim + feature]));
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        if values.len() < 2 {
            continue;
        }
        // Candidate thresholds: midpoints between consecutive distinct
        // values, thinned to the candidate budget.
        let cuts = values.len() - 1;
        let step = cuts.div_ceil(SPLIT_CANDIDATES);
        for c in (0..cuts).step_by(step) {
            let threshold = 0.5 * (values[c] + values[c + 1]);
            let (mut ln, mut ls, mut lq) = (0usize, 0.0f64, 0.0f64);
            let (mut rn, mut rs, mut rq) = (0usize, 0.0f64, 0.0f64);
            for &i in rows {
                let yi = y[i];
                if x[i * dim + feature] <= threshold {
                    ln += 1;
                    ls += yi;
                    lq += yi * yi;
                } else {
                    rn += 1;
                    rs += yi;
                    rq += yi * yi;
                }
            }
            if ln < config.min_leaf || rn < config.min_leaf {
                continue;
            }
            let child_sse =
                (lq - ls * ls / ln as f64).max(0.0) + (rq - rs * rs / rn as f64).max(0.0);
            if best.is_none_or(|(_, _, s)| child_sse < s) {
                best = Some((feature, threshold, child_sse));
            }
        }
    }
    let Some((feature, threshold, child_sse)) = best else {
        return leaf(nodes);
    };
    if child_sse >= parent_sse {
        return leaf(nodes);
    }
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| x[i * dim + feature] <= threshold);
    // Reserve this node's slot before growing children so the arena
    // indices stay stable.
    nodes.push(Node::Leaf(0.0));
    let slot = nodes.len() - 1;
    let left = grow(x, dim, y, &left_rows, depth + 1, config, nodes);
    let right = grow(x, dim, y, &right_rows, depth + 1, config, nodes);
    nodes[slot] = Node::Split { feature, threshold, left, right };
    slot
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_sample(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n * 2);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            x.extend_from_slice(&[a, b]);
            y.push((2.0 * a).tanh() + 0.5 * b + 0.05 * rng.random_range(-1.0..1.0));
        }
        (x, y)
    }

    #[test]
    fn predictions_stay_inside_the_response_range() {
        let (x, y) = grid_sample(300, 5);
        let forest = Forest::fit(&x, 300, 2, &y, &ForestConfig::default(), 9).unwrap();
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..40 {
            let p = forest.predict(&[-1.0 + 0.05 * i as f64, 0.3]).unwrap();
            assert!(p >= lo && p <= hi);
        }
    }

    #[test]
    fn same_seed_reproduces_predictions() {
        let (x, y) = grid_sample(200, 7);
        let cfg = ForestConfig::default();
        let f1 = Forest::fit(&x, 200, 2, &y, &cfg, 42).unwrap();
        let f2 = Forest::fit(&x, 200, 2, &y, &cfg, 42).unwrap();
        for i in 0..20 {
            let p = [-0.9 + 0.09 * i as f64, 0.4 - 0.04 * i as f64];
            assert_eq!(f1.predict(&p).unwrap().to_bits(), f2.predict(&p).unwrap().to_bits());
        }
    }

    #[test]
    fn forest_tracks_a_smooth_signal_better_than_the_mean() {
        let (x, y) = grid_sample(600, 11);
        let forest = Forest::fit(&x, 600, 2, &y, &ForestConfig::default(), 3).unwrap();
        let (xt, yt) = grid_sample(300, 12);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let mut forest_sq = 0.0;
        let mut mean_sq = 0.0;
        for (i, target) in yt.iter().enumerate() {
            let p = forest.predict(&xt[i * 2..i * 2 + 2]).unwrap();
            forest_sq += (p - target) * (p - target);
            mean_sq += (mean - target) * (mean - target);
        }
        assert!(forest_sq < 0.35 * mean_sq);
    }

    #[test]
    fn giant_min_leaf_collapses_to_the_sample_mean() {
        let (x, y) = grid_sample(80, 13);
        let cfg = ForestConfig { trees: 10, max_depth: 4, min_leaf: 80 };
        let forest = Forest::fit(&x, 80, 2, &y, &cfg, 1).unwrap();
        // Every tree is a single leaf holding its bootstrap mean, so the
        // prediction is constant in the features.
        let p1 = forest.predict(&[-0.5, 0.5]).unwrap();
        let p2 = forest.predict(&[0.8, -0.8]).unwrap();
        assert_abs_diff_eq!(p1, p2, epsilon = 0.0);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_abs_diff_eq!(p1, mean, epsilon = 0.1);
    }

    #[test]
    fn shape_violations_are_rejected() {
        let cfg = ForestConfig::default();
        assert!(Forest::fit(&[1.0, 2.0], 1, 2, &[0.5], &cfg, 0).is_ok());
        assert!(Forest::fit(&[1.0, 2.0], 2, 2, &[0.5, 0.5], &cfg, 0).is_err());
        assert!(Forest::fit(&[1.0, f64::NAN], 1, 2, &[0.5], &cfg, 0).is_err());
        let forest = Forest::fit(&[1.0, 2.0], 1, 2, &[0.5], &cfg, 0).unwrap();
        assert!(forest.predict(&[1.0]).is_err());
    }
}
