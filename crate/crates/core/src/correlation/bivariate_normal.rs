//! Standard bivariate normal rectangle probabilities.
//!
//! Upper-orthant probabilities follow A. Genz's BVNU algorithm (Drezner and
//! Wesolowsky's method with Gauss-Legendre quadrature of 6, 12 or 20 points
//! depending on |ρ|), accurate to roughly 1e-15.

use std::f64::consts::{PI, SQRT_2};

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

const TWO_PI: f64 = 2.0 * PI;

// Half of each symmetric Gauss-Legendre rule: abscissae in (-1, 0) and weights.
const GL6_X: [f64; 3] = [
    -0.932_469_514_203_152_2,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_197,
];
const GL6_W: [f64; 3] = [
    0.171_324_492_379_170_5,
    0.360_761_573_048_138_4,
    0.467_913_934_572_690_4,
];
const GL12_X: [f64; 6] = [
    -0.981_560_634_246_719_1,
    -0.904_117_256_370_475,
    -0.769_902_674_194_305,
    -0.587_317_954_286_617_1,
    -0.367_831_498_998_180_2,
    -0.125_233_408_511_469_2,
];
const GL12_W: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const GL20_X: [f64; 10] = [
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
const GL20_W: [f64; 10] = [
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

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile; ±∞ at 0 and 1.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // Newton polish of the library estimate.
    let mut x = Normal::standard().inverse_cdf(p);
    for _ in 0..2 {
        let density = (-x * x / 2.0).exp() / TWO_PI.sqrt();
        if density > 0.0 {
            x -= (normal_cdf(x) - p) / density;
        }
    }
    x
}

/// P(X > h, Y > k) for a standard bivariate normal with correlation `r`.
pub fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY {
            1.0
        } else {
            normal_cdf(-k)
        };
    }
    if k == f64::NEG_INFINITY {
        return normal_cdf(-h);
    }
    if r == 0.0 {
        return normal_cdf(-h) * normal_cdf(-k);
    }

    let (xs, ws): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6_X, &GL6_W)
    } else if r.abs() < 0.75 {
        (&GL12_X, &GL12_W)
    } else {
        (&GL20_X, &GL20_W)
    };

    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (&x, &w) in xs.iter().zip(ws) {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (1.0 + sign * x) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / (2.0 * TWO_PI) + normal_cdf(-h) * normal_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let a_sq = (1.0 - r) * (1.0 + r);
            let mut a = a_sq.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            bvn = a
                * (-(bs / a_sq + hk) / 2.0).exp()
                * (1.0 - c * (bs - a_sq) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_sq * a_sq / 5.0);
            if hk > -160.0 {
                let b = bs.sqrt();
                bvn -= (-hk / 2.0).exp()
                    * TWO_PI.sqrt()
                    * normal_cdf(-b / a)
                    * b
                    * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for (&x, &w) in xs.iter().zip(ws) {
                for sign in [-1.0, 1.0] {
                    let mut xs2 = a * (sign * x + 1.0);
                    xs2 *= xs2;
                    let rs = (1.0 - xs2).sqrt();
                    bvn += a
                        * w
                        * ((-bs / (2.0 * xs2) - hk / (1.0 + rs)).exp() / rs
                            - (-(bs / xs2 + hk) / 2.0).exp() * (1.0 + c * xs2 * (1.0 + d * xs2)));
                }
            }
            bvn = -bvn / TWO_PI;
        }
        if r > 0.0 {
            bvn += normal_cdf(-h.max(k));
        } else {
            bvn = -bvn;
            if k > h {
                if h < 0.0 {
                    bvn += normal_cdf(k) - normal_cdf(h);
                } else {
                    bvn += normal_cdf(-h) - normal_cdf(-k);
                }
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// P(X ≤ x, Y ≤ y).
pub fn cdf(x: f64, y: f64, r: f64) -> f64 {
    upper_orthant(-x, -y, r)
}

/// P(x0 < X ≤ x1, y0 < Y ≤ y1).
pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    (cdf(x1, y1, r) - cdf(x0, y1, r) - cdf(x1, y0, r) + cdf(x0, y0, r)).max(0.0)
}
