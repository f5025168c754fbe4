//! Scalar special functions: tail-stable standard normal quantities and
//! Poisson cumulative probabilities.
//!
//! The standard normal split at a standardized threshold `z` is the basic
//! building block of every Gaussian family. Inside `|z| <= 8` ratios are
//! evaluated directly from `erfc`; beyond that the inverse Mills ratio is
//! taken from the continued fraction of `Q(z) / pdf(z)`, which stays
//! accurate where the tail probability itself is tiny.

use crate::error::{Error, Result};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this |z| the direct ratio `pdf / tail` is replaced by the continued fraction.
pub const DIRECT_RATIO_LIMIT: f64 = 8.0;

/// Largest |z| for which conditional moments are reported.
pub const TAIL_STABLE_LIMIT: f64 = 38.0;

#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - cdf(z)` without cancellation.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// `Q(z) / pdf(z)` for `z >= 1` via backward evaluation of the continued fraction
/// `1 / (z + 1 / (z + 2 / (z + 3 / (z + ...))))`.
fn mills_ratio_cf(z: f64) -> f64 {
    debug_assert!(z >= 1.0);
    let mut t = z;
    for k in (1..=80).rev() {
        t = z + k as f64 / t;
    }
    1.0 / t
}

/// Mills ratio `Q(z) / pdf(z)`.
pub fn mills_ratio(z: f64) -> f64 {
    if z > DIRECT_RATIO_LIMIT {
        mills_ratio_cf(z)
    } else {
        norm_sf(z) / norm_pdf(z)
    }
}

/// `ln cdf(z)`, finite for every finite `z`.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z < -DIRECT_RATIO_LIMIT {
        -0.5 * z * z - LN_SQRT_2PI + mills_ratio_cf(-z).ln()
    } else if z > DIRECT_RATIO_LIMIT {
        (-norm_sf(z)).ln_1p()
    } else {
        norm_cdf(z).ln()
    }
}

/// `ln (1 - cdf(z))`, finite for every finite `z`.
#[inline]
pub fn log_norm_sf(z: f64) -> f64 {
    log_norm_cdf(-z)
}

/// Inverse of the standard normal CDF (Acklam's rational approximation
/// polished by one Halley step).
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement
    let e = if x < 0.0 {
        norm_cdf(x) - p
    } else {
        (1.0 - p) - norm_sf(x)
    };
    let u = e / norm_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Standard normal cut at `z`: the probabilities of `Z <= z` and `Z > z`
/// and the signed conditional means of each side.
#[derive(Debug, Clone, Copy)]
pub struct NormalCut {
    pub z: f64,
    pub lower: f64,
    pub upper: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

impl NormalCut {
    /// Only probabilities; valid for every finite `z`.
    pub fn new(z: f64) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::Numerical(format!("non-finite standardized threshold {z}")));
        }
        // The smaller side is evaluated directly, the other as its complement.
        let (lower, upper) = if z <= 0.0 {
            let lo = norm_cdf(z);
            (lo, 1.0 - lo)
        } else {
            let up = norm_sf(z);
            (1.0 - up, up)
        };
        Ok(Self {
            z,
            lower,
            upper,
            log_lower: log_norm_cdf(z),
            log_upper: log_norm_sf(z),
        })
    }

    /// `E[Z | side]` with `bit = +1` for `Z <= z` and `bit = -1` for `Z > z`.
    ///
    /// Equals `-bit * pdf(z) / P(side)`.
    pub fn conditional_mean(&self, bit: i8) -> Result<f64> {
        if self.z.abs() > TAIL_STABLE_LIMIT {
            return Err(Error::Numerical(format!(
                "standardized threshold {} outside the tail-stable range",
                self.z
            )));
        }
        let hazard = if bit > 0 {
            // pdf / cdf
            if self.z < -DIRECT_RATIO_LIMIT {
                1.0 / mills_ratio_cf(-self.z)
            } else {
                norm_pdf(self.z) / self.lower
            }
        } else if self.z > DIRECT_RATIO_LIMIT {
            1.0 / mills_ratio_cf(self.z)
        } else {
            norm_pdf(self.z) / self.upper
        };
        Ok(-(bit as f64) * hazard)
    }
}

/// Poisson split at threshold `tau` (applied as `X <= floor(tau)`).
#[derive(Debug, Clone, Copy)]
pub struct PoissonCut {
    pub rate: f64,
    pub cut: f64,
    /// `P(X = floor(tau))`.
    pub pmf_at_cut: f64,
    pub lower: f64,
    pub upper: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

const POISSON_MAX_RATE: f64 = 1e6;
const POISSON_TAIL_EPS: f64 = 1e-17;

/// `ln P(X = x)` for `X ~ Poisson(rate)`.
pub fn poisson_log_pmf(x: f64, rate: f64) -> f64 {
    if x == 0.0 {
        return -rate;
    }
    x * rate.ln() - rate - libm::lgamma(x + 1.0)
}

impl PoissonCut {
    pub fn new(rate: f64, tau: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() || rate > POISSON_MAX_RATE {
            return Err(Error::Numerical(format!(
                "Poisson rate {rate} outside (0, {POISSON_MAX_RATE}]"
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidThreshold {
                tau,
                reason: "Poisson thresholds must be finite and non-negative",
            });
        }
        let m = tau.floor();
        let log_pmf = poisson_log_pmf(m, rate);
        let pmf = log_pmf.exp();

        if m < rate {
            // lower tail: sum pmf(x)/pmf(m) for x = m, m-1, ..., 0
            let mut term = 1.0;
            let mut sum = 1.0;
            let mut x = m;
            while x > 0.0 {
                let ratio = x / rate;
                term *= ratio;
                sum += term;
                x -= 1.0;
                if term * ratio / (1.0 - ratio) < POISSON_TAIL_EPS * sum {
                    break;
                }
            }
            let log_lower = log_pmf + sum.ln();
            let lower = log_lower.exp();
            Ok(Self {
                rate,
                cut: m,
                pmf_at_cut: pmf,
                lower,
                upper: 1.0 - lower,
                log_lower,
                log_upper: (-lower).ln_1p(),
            })
        } else {
            // upper tail: sum pmf(x)/pmf(m) for x = m+1, m+2, ...
            let mut term = 1.0;
            let mut sum = 0.0;
            let mut x = m + 1.0;
            loop {
                let ratio = rate / x;
                term *= ratio;
                sum += term;
                let next = rate / (x + 1.0);
                if term == 0.0 || term * next / (1.0 - next) < POISSON_TAIL_EPS * sum {
                    break;
                }
                x += 1.0;
            }
            let log_upper = log_pmf + sum.ln();
            let upper = log_upper.exp();
            Ok(Self {
                rate,
                cut: m,
                pmf_at_cut: pmf,
                lower: 1.0 - upper,
                upper,
                log_lower: (-upper).ln_1p(),
                log_upper,
            })
        }
    }
}

/// Poisson CDF `P(X <= floor(x))`; zero for negative `x`.
pub fn poisson_cdf(x: f64, rate: f64) -> Result<f64> {
    if x < 0.0 {
        return Ok(0.0);
    }
    Ok(PoissonCut::new(rate, x)?.lower)
}

/// Running sum that switches to Neumaier compensation when asked to.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Accumulator {
    pub fn new(compensated: bool) -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
            compensated,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if self.compensated {
            let t = self.sum + x;
            if self.sum.abs() >= x.abs() {
                self.comp += (self.sum - t) + x;
            } else {
                self.comp += (x - t) + self.sum;
            }
            self.sum = t;
        } else {
            self.sum += x;
        }
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
