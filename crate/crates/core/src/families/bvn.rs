//! Bivariate standard normal distribution function.
//!
//! Drezner–Wesolowsky with Gauss–Legendre quadrature as refined by Genz
//! (2004); absolute error is at the level of double precision rounding.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};

const NODES_6: [f64; 3] = [
    -0.932_469_514_203_152_2,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_197,
];
const WEIGHTS_6: [f64; 3] = [
    0.171_324_492_379_170_5,
    0.360_761_573_048_138_4,
    0.467_913_934_572_691,
];

const NODES_12: [f64; 6] = [
    -0.981_560_634_246_719_1,
    -0.904_117_256_370_475,
    -0.769_902_674_194_305,
    -0.587_317_954_286_617_1,
    -0.367_831_498_998_180_2,
    -0.125_233_408_511_469_2,
];
const WEIGHTS_12: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];

const NODES_20: [f64; 10] = [
    -0.993_128_599_185_094_9,
    -0.963_971_927_277_913_8,
    -0.912_234_428_251_326,
    -0.839_116_971_822_218_8,
    -0.746_331_906_460_150_8,
    -0.636_053_680_726_515,
    -0.510_867_001_950_827_1,
    -0.373_706_088_715_419_6,
    -0.227_785_851_141_645_1,
    -0.076_526_521_133_497_33,
];
const WEIGHTS_20: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// `Φ⁻¹(p)`, with `±∞` at the endpoints.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        std_normal().inverse_cdf(p)
    }
}

/// `P(X ≤ h, Y ≤ k)` for standard normals with correlation `rho`.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return normal_cdf(k);
    }
    if k == f64::INFINITY {
        return normal_cdf(h);
    }
    if rho >= 1.0 {
        return normal_cdf(h.min(k));
    }
    if rho <= -1.0 {
        return (normal_cdf(h) - normal_cdf(-k)).max(0.0);
    }
    upper_orthant(-h, -k, rho).clamp(0.0, 1.0)
}

/// `P(X > h, Y > k)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let (nodes, weights): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&NODES_6, &WEIGHTS_6)
    } else if r.abs() < 0.75 {
        (&NODES_12, &WEIGHTS_12)
    } else {
        (&NODES_20, &WEIGHTS_20)
    };
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (&x, &w) in nodes.iter().zip(weights) {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (1.0 + sign * x) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (4.0 * PI) + normal_cdf(-h) * normal_cdf(-k);
    }

    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / a_s + hk) / 2.0).exp()
            * (1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * (2.0 * PI).sqrt()
                * normal_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (&x, &w) in nodes.iter().zip(weights) {
            for sign in [-1.0, 1.0] {
                let xs = (a * (sign * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                bvn += a
                    * w
                    * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                        - (-(bs / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + normal_cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += if h < 0.0 {
                normal_cdf(k) - normal_cdf(h)
            } else {
                normal_cdf(-h) - normal_cdf(-k)
            };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `∫_{-∞}^{h} φ(x) Φ((k - ρx)/√(1-ρ²)) dx` by composite Simpson on a
    /// truncated range.
    fn quadrature(h: f64, k: f64, rho: f64) -> f64 {
        let lo = -12.0;
        let hi = h.min(12.0);
        if hi <= lo {
            return 0.0;
        }
        let steps = 200_000;
        let step = (hi - lo) / steps as f64;
        let s = (1.0 - rho * rho).sqrt();
        let f = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt() * normal_cdf((k - rho * x) / s);
        let mut acc = f(lo) + f(hi);
        for i in 1..steps {
            let x = lo + i as f64 * step;
            acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * step / 3.0
    }

    #[test]
    fn orthant_identity() {
        for rho in [-0.99, -0.95, -0.5, 0.0, 0.3, 0.5, 0.75, 0.9, 0.93, 0.99] {
            let expected = 0.25 + f64::asin(rho) / (2.0 * PI);
            let got = bivariate_normal_cdf(0.0, 0.0, rho);
            assert!(
                (got - expected).abs() < 1e-12,
                "rho {rho}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn agrees_with_quadrature() {
        let points = [-3.0, -1.7, -0.4, 0.0, 0.25, 1.1, 2.6];
        for rho in [-0.97, -0.8, -0.6, -0.2, 0.1, 0.36, 0.64, 0.8, 0.95, 0.999] {
            for &h in &points {
                for &k in &points {
                    let got = bivariate_normal_cdf(h, k, rho);
                    let expected = quadrature(h, k, rho);
                    assert!(
                        (got - expected).abs() < 1e-9,
                        "({h}, {k}, {rho}): {got} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn limits() {
        assert_eq!(bivariate_normal_cdf(f64::NEG_INFINITY, 0.3, 0.5), 0.0);
        assert!((bivariate_normal_cdf(f64::INFINITY, 0.3, 0.5) - normal_cdf(0.3)).abs() < 1e-15);
        assert!(
            (bivariate_normal_cdf(0.4, -0.2, 0.0) - normal_cdf(0.4) * normal_cdf(-0.2)).abs()
                < 1e-15
        );
        assert!((bivariate_normal_cdf(0.4, -0.2, 1.0) - normal_cdf(-0.2)).abs() < 1e-15);
        assert!(bivariate_normal_cdf(-0.4, -0.2, -1.0) == 0.0);
    }
}
