//! Shared test oracles, independent of the crate's solver internals.
//!
//! The centerpiece is a projected-gradient optimizer for the same
//! L1-constrained problem the coordinate-descent solver targets:
//! accelerated (FISTA) gradient steps on the smooth weighted loss followed
//! by an exact Euclidean projection onto the L1 ball over the full
//! coefficient vector, intercept included. Projected gradient shares no
//! code or algorithmic structure with penalized coordinate descent, so
//! agreement between the two is strong evidence both are correct.

#![allow(dead_code)]

use hal_curve::hal::Link;
use hal_curve::ColMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// A self-contained constrained-regression instance.
pub struct Instance {
    pub x: ColMatrix,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub link: Link,
    pub bound: f64,
}

/// Numerically stable log(1 + e^eta).
fn log1pexp(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// Weighted empirical loss (1/n) Σ w_i ℓ(y_i, η_i) evaluated from raw
/// coefficients, with no linear-predictor capping anywhere.
pub fn loss_value(inst: &Instance, intercept: f64, beta: &[f64]) -> f64 {
    let n = inst.x.rows();
    let mut eta = vec![intercept; n];
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            for (e, v) in eta.iter_mut().zip(inst.x.col(j)) {
                *e += b * v;
            }
        }
    }
    let mut total = 0.0;
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let term = match inst.link {
            Link::Identity => {
                let r = inst.y[i] - eta[i];
                0.5 * r * r
            }
            Link::Logit => log1pexp(eta[i]) - inst.y[i] * eta[i],
        };
        total += inst.w[i] * term;
    }
    total / n as f64
}

/// Exact Euclidean projection onto {z : ‖z‖₁ ≤ c} (sort-based algorithm).
pub fn project_l1(z: &mut [f64], c: f64) {
    let norm: f64 = z.iter().map(|v| v.abs()).sum();
    if norm <= c {
        return;
    }
    if c == 0.0 {
        z.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut mag: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mag.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mag.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - c) / (j + 1) as f64;
        if m - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    for v in z.iter_mut() {
        let shrunk = (v.abs() - theta).max(0.0);
        *v = shrunk * v.signum();
    }
}

/// Gradient of the weighted loss with respect to (intercept, beta).
fn gradient(inst: &Instance, point: &[f64], grad: &mut [f64]) {
    let n = inst.x.rows();
    let p = inst.x.cols();
    let mut eta = vec![point[0]; n];
    for j in 0..p {
        let b = point[j + 1];
        if b != 0.0 {
            for (e, v) in eta.iter_mut().zip(inst.x.col(j)) {
                *e += b * v;
            }
        }
    }
    // Residual scale dℓ/dη per row, already weighted.
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let d = match inst.link {
                Link::Identity => eta[i] - inst.y[i],
                Link::Logit => 1.0 / (1.0 + (-eta[i]).exp()) - inst.y[i],
            };
            inst.w[i] * d
        })
        .collect();
    let inv_n = 1.0 / n as f64;
    grad[0] = resid.iter().sum::<f64>() * inv_n;
    for j in 0..p {
        let mut g = 0.0;
        for (r, v) in resid.iter().zip(inst.x.col(j)) {
            g += r * v;
        }
        grad[j + 1] = g * inv_n;
    }
}

/// Largest eigenvalue of (1/n) X̃ᵀ diag(w) X̃ (X̃ has the intercept column)
/// by power iteration; an upper curvature bound for the identity link.
fn curvature_bound(inst: &Instance) -> f64 {
    let n = inst.x.rows();
    let p = inst.x.cols() + 1;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 1.0;
    for _ in 0..300 {
        // u = X̃ v, weighted; then z = (1/n) X̃ᵀ u.
        let mut u = vec![v[0]; n];
        for j in 0..inst.x.cols() {
            let b = v[j + 1];
            for (ui, xi) in u.iter_mut().zip(inst.x.col(j)) {
                *ui += b * xi;
            }
        }
        for (ui, wi) in u.iter_mut().zip(&inst.w) {
            *ui *= wi;
        }
        let inv_n = 1.0 / n as f64;
        let mut z = vec![0.0; p];
        z[0] = u.iter().sum::<f64>() * inv_n;
        for j in 0..inst.x.cols() {
            let mut acc = 0.0;
            for (ui, xi) in u.iter().zip(inst.x.col(j)) {
                acc += ui * xi;
            }
            z[j + 1] = acc * inv_n;
        }
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1e-12;
        }
        lambda = norm;
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / norm;
        }
    }
    lambda
}

/// Minimizes the constrained problem by FISTA with exact L1-ball
/// projection and adaptive restarts; returns the best objective found.
pub fn oracle_objective(inst: &Instance) -> f64 {
    let p = inst.x.cols() + 1;
    let base_l = curvature_bound(inst).max(1e-12);
    let l = match inst.link {
        Link::Identity => base_l,
        // Bernoulli curvature p(1-p) ≤ 1/4 scales the quadratic bound.
        Link::Logit => base_l / 4.0,
    };
    let step = 1.0 / l;

    let mut z = vec![0.0; p];
    project_l1(&mut z, inst.bound);
    let mut z_prev = z.clone();
    let mut momentum = z.clone();
    let mut t_k: f64 = 1.0;
    let mut best = loss_value(inst, z[0], &z[1..]);
    let mut grad = vec![0.0; p];
    let mut stall = 0usize;

    for _ in 0..60_000 {
        gradient(inst, &momentum, &mut grad);
        let mut z_next = vec![0.0; p];
        for i in 0..p {
            z_next[i] = momentum[i] - step * grad[i];
        }
        project_l1(&mut z_next, inst.bound);

        let obj = loss_value(inst, z_next[0], &z_next[1..]);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        let gamma = (t_k - 1.0) / t_next;
        for i in 0..p {
            momentum[i] = z_next[i] + gamma * (z_next[i] - z_prev[i]);
        }
        z_prev = z_next.clone();
        z = z_next;
        t_k = t_next;

        if obj > best - 1e-15 {
            // No material progress; restart momentum if the objective rose.
            if obj > best {
                momentum = z.clone();
                t_k = 1.0;
            }
            stall += 1;
            if stall > 400 {
                break;
            }
        } else {
            stall = 0;
        }
        if obj < best {
            best = obj;
        }
    }
    best
}

/// Draws a dense random instance: n ≤ 40 rows, ≤ 6 columns, mixed
/// continuous outcome or Bernoulli outcome matching the link, and a bound
/// spanning the inactive-to-binding range.
pub fn random_instance(seed: u64, link: Link) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(8..=40);
    let p = rng.random_range(1..=6);
    let mut cols = vec![0.0; n * p];
    for v in cols.iter_mut() {
        *v = rng.random_range(-1.5..1.5);
    }
    let x = ColMatrix::from_columns(n, p, cols);
    let truth: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let intercept = rng.random_range(-0.5..0.5);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mut eta = intercept;
            for (j, t) in truth.iter().enumerate() {
                eta += t * x.get(i, j);
            }
            match link {
                Link::Identity => eta + 0.3 * rng.random_range(-1.0..1.0),
                Link::Logit => {
                    let prob = 1.0 / (1.0 + (-eta).exp());
                    if rng.random::<f64>() < prob {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    // Mostly unit weights, sometimes ragged, sometimes with zeroed rows.
    let w: Vec<f64> = match seed % 3 {
        0 => vec![1.0; n],
        1 => (0..n).map(|_| rng.random_range(0.2..2.0)).collect(),
        _ => (0..n).map(|i| if i % 5 == 0 { 0.0 } else { 1.0 }).collect(),
    };
    let bound = rng.random_range(0.05..3.0);
    Instance { x, y, w, link, bound }
}
