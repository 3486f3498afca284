//! Product kernels for localizing the response curve at a stratum value.
//!
//! A [`KernelSpec`] bundles the kernel family, the center `v₀`, the bandwidth
//! `h`, and the orthogonality order `J`. Weights take the product form
//!
//! ```text
//! K_{h,v₀}(v) = h^{−r} ∏_j K_u((v_j − v₀_j) / h)
//! ```
//!
//! where `K_u` is a univariate density integrating to one. The supported
//! families are the uniform density on [−1,1], the Epanechnikov density
//! `0.75·(1−u²)` on [−1,1], and the standard Gaussian truncated to [−3,3]
//! (renormalized to unit mass).
//!
//! All three families are symmetric, so their first moment vanishes and they
//! suit targets with one derivative of smoothness (`J = 1`). For `J = 2` the
//! univariate kernel is multiplied by an even polynomial `a + b·u²` with
//! `(a, b)` chosen so the result still integrates to one while its second
//! moment vanishes; such kernels take negative values, which is expected.

use crate::error::{Error, Result};
use crate::num::simpson;

/// √(2π), the Gaussian density normalizer.
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Mass of the standard normal on [−3, 3]: erf(3/√2).
const GAUSS_TRUNC_MASS: f64 = 0.997_300_203_936_739_8;

/// Univariate kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// 1/2 on [−1, 1].
    Uniform,
    /// 0.75·(1 − u²) on [−1, 1].
    Epanechnikov,
    /// Standard normal truncated to [−3, 3], renormalized.
    GaussianTruncated,
}

impl KernelFamily {
    /// Half-width of the support of the standardized kernel.
    pub fn support_radius(self) -> f64 {
        match self {
            KernelFamily::Uniform | KernelFamily::Epanechnikov => 1.0,
            KernelFamily::GaussianTruncated => 3.0,
        }
    }

    /// The base density K_u at a standardized offset.
    #[inline]
    fn base(self, u: f64) -> f64 {
        match self {
            KernelFamily::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelFamily::GaussianTruncated => {
                if u.abs() <= 3.0 {
                    (-0.5 * u * u).exp() / (SQRT_2PI * GAUSS_TRUNC_MASS)
                } else {
                    0.0
                }
            }
        }
    }

    /// Second and fourth moments of the base density, by quadrature.
    fn moments(self) -> (f64, f64) {
        let rad = self.support_radius();
        let m2 = simpson(|u| u * u * self.base(u), -rad, rad, 20_000);
        let m4 = simpson(|u| u.powi(4) * self.base(u), -rad, rad, 20_000);
        (m2, m4)
    }
}

/// A product kernel centered at a stratum value.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    center: Vec<f64>,
    h: f64,
    order: usize,
    /// Even-polynomial correction (a, b): K_u is multiplied by a + b·u².
    /// (1, 0) for order 1; moment-matched for order 2.
    poly: (f64, f64),
}

impl KernelSpec {
    /// Builds a kernel specification.
    ///
    /// # Arguments
    ///
    /// * `family` - univariate kernel family used in each coordinate.
    /// * `center` - localization point v₀ (length = dimension of V).
    /// * `h` - bandwidth, strictly positive.
    /// * `order` - orthogonality order J; 1 (symmetric base kernel) or 2
    ///   (second moment removed by polynomial multiplication).
    ///
    /// # Errors
    ///
    /// [`Error::InvalidInput`] if `h ≤ 0` or not finite, `center` is empty or
    /// non-finite, or `order` is outside {1, 2}.
    pub fn new(family: KernelFamily, center: Vec<f64>, h: f64, order: usize) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
        }
        if center.is_empty() {
            return Err(Error::invalid("kernel center must have at least one coordinate"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("kernel center must be finite"));
        }
        let poly = match order {
            1 => (1.0, 0.0),
            2 => {
                // Solve a·1 + b·m2 = 1, a·m2 + b·m4 = 0 so the corrected
                // kernel keeps unit mass while its second moment vanishes.
                let (m2, m4) = family.moments();
                let det = m4 - m2 * m2;
                (m4 / det, -m2 / det)
            }
            _ => {
                return Err(Error::invalid(format!(
                    "orthogonality order must be 1 or 2, got {order}"
                )))
            }
        };
        Ok(KernelSpec { family, center, h, order, poly })
    }

    /// Dimension r of the stratum the kernel lives on.
    #[inline]
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    #[inline]
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// A copy of this spec with a different bandwidth.
    pub fn with_bandwidth(&self, h: f64) -> Result<Self> {
        KernelSpec::new(self.family, self.center.clone(), h, self.order)
    }

    /// The univariate (possibly polynomial-corrected) kernel at offset `u`.
    #[inline]
    pub fn univariate(&self, u: f64) -> f64 {
        let (a, b) = self.poly;
        (a + b * u * u) * self.family.base(u)
    }

    /// Product-kernel weight K_{h,v₀}(v) = h^{−r} ∏_j K_u((v_j − v₀_j)/h).
    ///
    /// `v` must have the same dimension as the center.
    pub fn weight(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.center.len(), "kernel input has wrong dimension");
        let mut w = 1.0;
        for (vj, cj) in v.iter().zip(&self.center) {
            let u = (vj - cj) / self.h;
            w *= self.univariate(u);
            if w == 0.0 {
                return 0.0;
            }
        }
        w / self.h.powi(self.center.len() as i32)
    }

    /// True when `v` lies strictly outside the kernel's support box.
    pub fn outside_support(&self, v: &[f64]) -> bool {
        let rad = self.family.support_radius() * self.h;
        v.iter().zip(&self.center).any(|(vj, cj)| (vj - cj).abs() > rad)
    }
}
