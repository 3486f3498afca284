//! Small numeric primitives: logistic maps and the standard normal quantile.
//!
//! The quantile is the only piece of distributional numerics the crate needs
//! (critical values for confidence intervals and selection penalties), so it
//! is implemented directly from Wichura's algorithm AS 241 (PPND16 variant,
//! ~1e-16 relative accuracy) rather than pulling in a statistics dependency.

/// Logistic function `expit(x) = 1 / (1 + exp(-x))`, evaluated stably for
/// large |x|.
#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-odds `logit(p) = log(p / (1 - p))`. Finite only for p in (0, 1).
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Composite Simpson quadrature of `f` over [a, b] with `n` subintervals
/// (`n` is rounded up to even). Used for kernel moment construction and as
/// an in-crate oracle for quadrature-style checks.
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n.max(2) } else { n + 1 };
    let step = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + step * i as f64;
        sum += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * step / 3.0
}

// AS 241 coefficient tables (Wichura 1988), central / middle / tail regions.
// The published constants carry more digits than f64 resolves; keep them
// verbatim so the source matches the reference tables.
#[allow(clippy::excessive_precision)]
const AS241_A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const AS241_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
#[allow(clippy::excessive_precision)]
const AS241_C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const AS241_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const AS241_E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const AS241_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Evaluates a degree-7 polynomial with ascending coefficients by Horner's
/// rule.
#[inline]
fn poly7(c: &[f64; 8], x: f64) -> f64 {
    (((((((c[7] * x + c[6]) * x + c[5]) * x + c[4]) * x + c[3]) * x + c[2]) * x + c[1]) * x)
        + c[0]
}

/// Standard normal quantile function Φ⁻¹(p) (Wichura, AS 241).
///
/// # Panics
///
/// Panics if `p` is outside (0, 1); callers validate first.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly7(&AS241_A, r) / poly7(&AS241_B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly7(&AS241_C, r) / poly7(&AS241_D, r)
    } else {
        let r = r - 5.0;
        poly7(&AS241_E, r) / poly7(&AS241_F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expit_matches_known_values() {
        assert!((expit(0.0) - 0.5).abs() < 1e-15);
        // expit(0.5) = 0.62245933120185459...
        assert!((expit(0.5) - 0.622_459_331_201_854_6).abs() < 1e-15);
        assert!((expit(-0.5) + expit(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(expit(800.0), 1.0);
        assert_eq!(expit(-800.0), 0.0);
    }

    #[test]
    fn logit_inverts_expit() {
        for &p in &[1e-6, 0.01, 0.3, 0.5, 0.73, 0.999] {
            assert!((expit(logit(p)) - p).abs() < 1e-12, "round trip failed at {p}");
        }
    }

    #[test]
    fn normal_quantile_matches_reference() {
        // Reference values computed with R's qnorm (double precision).
        let cases = [
            (0.975, 1.959_963_984_540_054),
            (0.95, 1.644_853_626_951_472_2),
            (0.84, 0.994_457_883_209_753_1),
            (0.5, 0.0),
            (0.3, -0.524_400_512_708_041_2),
            (0.025, -1.959_963_984_540_054),
            (0.999, 3.090_232_306_167_813_5),
            (1e-10, -6.361_340_902_404_056),
        ];
        for (p, z) in cases {
            let got = normal_quantile(p);
            assert!(
                (got - z).abs() < 1e-9 * z.abs().max(1.0),
                "qnorm({p}): got {got}, want {z}"
            );
        }
    }

    #[test]
    fn normal_quantile_agrees_with_density_quadrature() {
        // Independent check: Φ(z) recovered by integrating the normal density
        // must return the probability the quantile was evaluated at.
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for &p in &[0.025, 0.3, 0.5, 0.84, 0.95, 0.975, 0.999] {
            let z = normal_quantile(p);
            let cdf = 0.5 + simpson(phi, 0.0, z, 40_000);
            assert!((cdf - p).abs() < 1e-12, "quadrature disagrees at p={p}: cdf={cdf}");
        }
    }

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        // Simpson is exact for cubics.
        let val = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 2);
        // ∫(x³−2x+1) over [−1,3] = [x⁴/4 − x² + x] = (81/4−9+3) − (1/4−1−1) = 16.
        assert!((val - 16.0).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_is_antisymmetric() {
        for &p in &[0.6, 0.75, 0.9, 0.99, 0.9999] {
            let upper = normal_quantile(p);
            let lower = normal_quantile(1.0 - p);
            assert!((upper + lower).abs() < 1e-12, "antisymmetry failed at {p}");
        }
    }
}
