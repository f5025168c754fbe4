//! Gaussian families for the location model `X_i = w_i alpha + noise`.
//!
//! Three parameterizations share one truncation kernel: with
//! `z = (tau - mu) / sigma` and `g = E[Z | side]` for a standard normal
//! `Z`, the shifts of `U = (Z, Z^2)` once the side is known are
//!
//! ```text
//! E[Z | b] - 0       = g
//! E[Z^2 | b] - 1     = z g
//! Var(Z | b) - 1     = z g - g^2
//! Cov(Z, Z^2 | b)    = g (1 + z^2 - z g)
//! Var(Z^2 | b) - 2   = z g (1 + z^2 - z g)
//! ```
//!
//! Every shift is proportional to `g`, so nothing cancels when the bit
//! carries little information. Each family maps these through the affine
//! relation between its statistic and `U`.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::expfam::{
    Bit, CensorSplit, CensoredDataset, ConditionalShift, Constraint, ExpFamily, Moments, ObservationDesign, Stat,
};
use crate::special::{norm_cdf, norm_pdf, norm_quantile, NormalCut, FRAC_1_SQRT_2PI, TAIL_STABLE_LIMIT};

/// `E[f(mu + sigma Z)]` by composite Simpson on `[-14, 14]`.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, mu: f64, sigma: f64) -> f64 {
    const HALF_WIDTH: f64 = 14.0;
    const INTERVALS: usize = 4000;
    let h = 2.0 * HALF_WIDTH / INTERVALS as f64;
    let mut acc = 0.0;
    for i in 0..=INTERVALS {
        let z = -HALF_WIDTH + i as f64 * h;
        let w = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f(mu + sigma * z) * norm_pdf(z);
    }
    acc * h / 3.0
}

/// Standardized truncation quantities for one observation.
#[derive(Debug, Clone, Copy)]
struct Truncation {
    z: f64,
    g: f64,
}

impl Truncation {
    fn new(mu: f64, sigma: f64, tau: f64, bit: Bit) -> Result<Self> {
        let z = (tau - mu) / sigma;
        let g = NormalCut::new(z)?.conditional_mean(bit.sign())?;
        Ok(Self { z, g })
    }

    /// `Var(Z | b) - 1`.
    fn var_z(&self) -> f64 {
        self.g * (self.z - self.g)
    }

    /// `Cov(Z, Z^2 | b)`.
    fn cov_z_z2(&self) -> f64 {
        self.g * (1.0 + self.z * self.z - self.z * self.g)
    }

    /// `Var(Z^2 | b) - 2`.
    fn var_z2(&self) -> f64 {
        self.z * self.cov_z_z2()
    }
}

fn gaussian_split(mu: f64, sigma: f64, tau: f64) -> Result<CensorSplit> {
    let cut = NormalCut::new((tau - mu) / sigma)?;
    Ok(CensorSplit {
        below: cut.lower,
        above: cut.upper,
        log_below: cut.log_lower,
        log_above: cut.log_upper,
    })
}

/// Conditional first and second moments `(E[X | B = b], E[X^2 | B = b])`
/// of `X ~ N(mu, sigma^2)` censored at `tau`.
pub fn gaussian_conditional_moments(mu: f64, sigma: f64, tau: f64, bit: Bit) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let t = Truncation::new(mu, sigma, tau, bit)?;
    let first = mu + sigma * t.g;
    let second = sigma * sigma + mu * mu + sigma * t.g * (tau + mu);
    Ok((first, second))
}

/// Clamped fraction of `+1` bits, kept away from 0 and 1.
fn clamped_fraction(data: &CensoredDataset) -> f64 {
    let n = data.len() as f64;
    data.below_fraction().clamp(0.5 / n, 1.0 - 0.5 / n)
}

/// `alpha` such that `P(X <= mean tau) = fraction` with `X ~ N(w alpha, sigma^2)`.
fn location_start(data: &CensoredDataset, weight_of: impl Fn(&ObservationDesign) -> f64, sigma: f64) -> f64 {
    let n = data.len() as f64;
    let mean_tau = data.designs().map(|d| d.tau()).sum::<f64>() / n;
    let mean_w = data.designs().map(&weight_of).sum::<f64>() / n;
    if mean_w.abs() < 1e-12 {
        return 0.0;
    }
    let z = norm_quantile(clamped_fraction(data));
    (mean_tau - sigma * z) / mean_w
}

/// Gaussian with known variance; `T = x`, `eta = mu / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKnownVariance {
    pub sigma: f64,
}

impl GaussianKnownVariance {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    fn mean(&self, eta: &[f64]) -> f64 {
        self.sigma * self.sigma * eta[0]
    }
}

impl ExpFamily for GaussianKnownVariance {
    fn name(&self) -> &str {
        "gaussian-case1"
    }

    fn stat_dim(&self) -> usize {
        1
    }

    fn validate_threshold(&self, tau: f64) -> Result<()> {
        if tau.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidThreshold {
                tau,
                reason: "threshold must be finite",
            })
        }
    }

    fn log_partition(&self, eta: &[f64]) -> Result<f64> {
        Ok(0.5 * self.sigma * self.sigma * eta[0] * eta[0])
    }

    fn base_measure(&self, x: f64) -> f64 {
        let s = self.sigma;
        FRAC_1_SQRT_2PI / s * (-0.5 * x * x / (s * s)).exp()
    }

    fn sufficient_statistic(&self, x: f64, _offset: f64) -> Stat {
        smallvec![x]
    }

    fn cdf(&self, x: f64, eta: &[f64], _offset: f64) -> Result<f64> {
        Ok(norm_cdf((x - self.mean(eta)) / self.sigma))
    }

    fn split(&self, eta: &[f64], design: &ObservationDesign) -> Result<CensorSplit> {
        gaussian_split(self.mean(eta), self.sigma, design.tau())
    }

    fn conditional_shift(&self, eta: &[f64], design: &ObservationDesign, bit: Bit) -> Result<ConditionalShift> {
        let s = self.sigma;
        let t = Truncation::new(self.mean(eta), s, design.tau(), bit)?;
        Ok(ConditionalShift {
            mean: smallvec![s * t.g],
            cov: smallvec![s * s * t.var_z()],
        })
    }

    fn moments(&self, eta: &[f64], _offset: f64) -> Result<Moments> {
        Ok(Moments {
            mean: smallvec![self.mean(eta)],
            cov: smallvec![self.sigma * self.sigma],
        })
    }

    fn third_abs_moment(&self, eta: &[f64], _offset: f64) -> Result<f64> {
        Ok(gaussian_expectation(|x| x.abs().powi(3), self.mean(eta), self.sigma))
    }

    fn sample(&self, eta: &[f64], _offset: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let z: f64 = StandardNormal.sample(rng);
        Ok(self.mean(eta) + self.sigma * z)
    }

    fn initial_guess(&self, data: &CensoredDataset) -> Option<Vec<f64>> {
        if data.param_dim() != 1 {
            return None;
        }
        let s2 = self.sigma * self.sigma;
        Some(vec![location_start(data, |d| d.entry(0, 0) * s2, self.sigma)])
    }

    fn monotone_scalar_likelihood(&self) -> bool {
        true
    }
}

/// Gaussian with known mean (carried as the observation offset);
/// `T = (x - mu)^2`, `eta = -1 / (2 sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianKnownMean;

impl GaussianKnownMean {
    fn sigma(eta: &[f64]) -> Result<f64> {
        if eta[0] < 0.0 && eta[0].is_finite() {
            Ok((-0.5 / eta[0]).sqrt())
        } else {
            Err(Error::NaturalParameter(format!(
                "known-mean Gaussian needs eta < 0, got {}",
                eta[0]
            )))
        }
    }
}

impl ExpFamily for GaussianKnownMean {
    fn name(&self) -> &str {
        "gaussian-case2"
    }

    fn stat_dim(&self) -> usize {
        1
    }

    fn parameter_domain(&self, k: usize) -> Vec<Constraint> {
        if k == 1 {
            vec![Constraint::StrictlyPositive]
        } else {
            vec![Constraint::Unbounded; k]
        }
    }

    fn validate_threshold(&self, tau: f64) -> Result<()> {
        if tau.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidThreshold {
                tau,
                reason: "threshold must be finite",
            })
        }
    }

    fn validate_design(&self, design: &ObservationDesign) -> Result<()> {
        if design.stat_dim() != 1 {
            return Err(Error::InvalidInput("gaussian-case2 expects d = 1".into()));
        }
        self.validate_threshold(design.tau())
    }

    fn log_partition(&self, eta: &[f64]) -> Result<f64> {
        Self::sigma(eta)?;
        Ok(-0.5 * (-2.0 * eta[0]).ln())
    }

    fn base_measure(&self, _x: f64) -> f64 {
        FRAC_1_SQRT_2PI
    }

    fn sufficient_statistic(&self, x: f64, offset: f64) -> Stat {
        smallvec![(x - offset) * (x - offset)]
    }

    fn cdf(&self, x: f64, eta: &[f64], offset: f64) -> Result<f64> {
        Ok(norm_cdf((x - offset) / Self::sigma(eta)?))
    }

    fn split(&self, eta: &[f64], design: &ObservationDesign) -> Result<CensorSplit> {
        gaussian_split(design.offset(), Self::sigma(eta)?, design.tau())
    }

    fn conditional_shift(&self, eta: &[f64], design: &ObservationDesign, bit: Bit) -> Result<ConditionalShift> {
        let s = Self::sigma(eta)?;
        let s2 = s * s;
        let t = Truncation::new(design.offset(), s, design.tau(), bit)?;
        Ok(ConditionalShift {
            mean: smallvec![s2 * t.z * t.g],
            cov: smallvec![s2 * s2 * t.var_z2()],
        })
    }

    fn moments(&self, eta: &[f64], _offset: f64) -> Result<Moments> {
        let s2 = Self::sigma(eta)?.powi(2);
        Ok(Moments {
            mean: smallvec![s2],
            cov: smallvec![2.0 * s2 * s2],
        })
    }

    fn third_abs_moment(&self, eta: &[f64], _offset: f64) -> Result<f64> {
        // E[(X - mu)^6] = 15 sigma^6
        Ok(15.0 * Self::sigma(eta)?.powi(6))
    }

    fn sample(&self, eta: &[f64], offset: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let z: f64 = StandardNormal.sample(rng);
        Ok(offset + Self::sigma(eta)? * z)
    }

    fn initial_guess(&self, data: &CensoredDataset) -> Option<Vec<f64>> {
        if data.param_dim() != 1 {
            return None;
        }
        // Observations above the mean: P(X <= tau) = Phi((tau - mu) / sigma).
        let (mut gap, mut below, mut count) = (0.0f64, 0.0f64, 0.0f64);
        for o in data.observations() {
            let dev = o.design.tau() - o.design.offset();
            if dev.abs() > 1e-12 {
                gap += dev.abs();
                count += 1.0;
                let agrees = (o.bit == Bit::Below) == (dev > 0.0);
                if agrees {
                    below += 1.0;
                }
            }
        }
        if count == 0.0 {
            return Some(vec![1.0]);
        }
        let frac = (below / count).clamp(0.5 / count, 1.0 - 0.5 / count);
        let z = norm_quantile(frac);
        let v = data.observations()[0].design.entry(0, 0);
        let scale = -2.0 * v; // canonical design has v = -1/2
        let theta = if z > 0.05 && scale > 0.0 {
            let sigma = (gap / count) / z;
            1.0 / (sigma * sigma) / scale
        } else {
            1.0
        };
        Some(vec![theta.clamp(1e-6, 1e6)])
    }

    fn monotone_scalar_likelihood(&self) -> bool {
        true
    }
}

/// Gaussian with unknown mean and variance; `T = (x, x^2)`,
/// `eta = (mu / sigma^2, -1 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianTwoParameter;

impl GaussianTwoParameter {
    /// `(mu, sigma)` from the natural parameter.
    pub fn location_scale(eta: &[f64]) -> Result<(f64, f64)> {
        if !(eta[1] < 0.0) || !eta[1].is_finite() || !eta[0].is_finite() {
            return Err(Error::NaturalParameter(format!(
                "two-parameter Gaussian needs eta_2 < 0, got ({}, {})",
                eta[0], eta[1]
            )));
        }
        let var = -0.5 / eta[1];
        Ok((eta[0] * var, var.sqrt()))
    }
}

impl ExpFamily for GaussianTwoParameter {
    fn name(&self) -> &str {
        "gaussian-case3"
    }

    fn stat_dim(&self) -> usize {
        2
    }

    fn parameter_domain(&self, k: usize) -> Vec<Constraint> {
        if k == 2 {
            vec![Constraint::Unbounded, Constraint::StrictlyPositive]
        } else {
            vec![Constraint::Unbounded; k]
        }
    }

    fn validate_threshold(&self, tau: f64) -> Result<()> {
        if tau.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidThreshold {
                tau,
                reason: "threshold must be finite",
            })
        }
    }

    fn log_partition(&self, eta: &[f64]) -> Result<f64> {
        Self::location_scale(eta)?;
        Ok(-eta[0] * eta[0] / (4.0 * eta[1]) - 0.5 * (-2.0 * eta[1]).ln())
    }

    fn base_measure(&self, _x: f64) -> f64 {
        FRAC_1_SQRT_2PI
    }

    fn sufficient_statistic(&self, x: f64, _offset: f64) -> Stat {
        smallvec![x, x * x]
    }

    fn cdf(&self, x: f64, eta: &[f64], _offset: f64) -> Result<f64> {
        let (mu, s) = Self::location_scale(eta)?;
        Ok(norm_cdf((x - mu) / s))
    }

    fn split(&self, eta: &[f64], design: &ObservationDesign) -> Result<CensorSplit> {
        let (mu, s) = Self::location_scale(eta)?;
        gaussian_split(mu, s, design.tau())
    }

    fn conditional_shift(&self, eta: &[f64], design: &ObservationDesign, bit: Bit) -> Result<ConditionalShift> {
        let (mu, s) = Self::location_scale(eta)?;
        let tau = design.tau();
        let t = Truncation::new(mu, s, tau, bit)?;
        // T = a + A U with A = [[s, 0], [2 mu s, s^2]]
        let a = [[s, 0.0], [2.0 * mu * s, s * s]];
        let du = [[t.var_z(), t.cov_z_z2()], [t.cov_z_z2(), t.var_z2()]];
        let mut cov: smallvec::SmallVec<[f64; 16]> = smallvec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        acc += a[i][p] * du[p][q] * a[j][q];
                    }
                }
                cov[i * 2 + j] = acc;
            }
        }
        let shift = s * t.g;
        Ok(ConditionalShift {
            mean: smallvec![shift, shift * (mu + tau)],
            cov,
        })
    }

    fn moments(&self, eta: &[f64], _offset: f64) -> Result<Moments> {
        let (mu, s) = Self::location_scale(eta)?;
        let s2 = s * s;
        Ok(Moments {
            mean: smallvec![mu, s2 + mu * mu],
            cov: smallvec![s2, 2.0 * mu * s2, 2.0 * mu * s2, 2.0 * s2 * s2 + 4.0 * mu * mu * s2],
        })
    }

    fn third_abs_moment(&self, eta: &[f64], _offset: f64) -> Result<f64> {
        let (mu, s) = Self::location_scale(eta)?;
        Ok(gaussian_expectation(|x| (x * x + x.powi(4)).powf(1.5), mu, s))
    }

    fn sample(&self, eta: &[f64], _offset: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let (mu, s) = Self::location_scale(eta)?;
        let z: f64 = StandardNormal.sample(rng);
        Ok(mu + s * z)
    }

    fn initial_guess(&self, data: &CensoredDataset) -> Option<Vec<f64>> {
        if data.param_dim() != 2 {
            return None;
        }
        let alpha = location_start(data, |d| d.entry(0, 0), 1.0);
        Some(vec![alpha, 1.0])
    }
}

/// Case 1: unknown mean `alpha`, known `sigma`; `theta = alpha`, `v_i = w_i / sigma^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCase1 {
    pub weights: Vec<f64>,
    pub sigma: f64,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput("weights must be finite".into()));
    }
    Ok(())
}

fn check_len(expected: usize, taus: &[f64]) -> Result<()> {
    if taus.len() != expected {
        return Err(Error::InvalidInput(format!(
            "{} thresholds for {expected} observations",
            taus.len()
        )));
    }
    Ok(())
}

/// `p(tau)^2 / (F(tau) (1 - F(tau)))` for `N(mu, sigma^2)`.
fn censoring_factor(mu: f64, sigma: f64, tau: f64) -> Result<f64> {
    let z = (tau - mu) / sigma;
    if z.abs() > TAIL_STABLE_LIMIT {
        // the term is below 1e-300 here
        return Ok(0.0);
    }
    let cut = NormalCut::new(z)?;
    // pdf / (F (1 - F)) as (pdf / F) * (pdf / (1 - F)), tail-stable
    let below = -cut.conditional_mean(1)?;
    let above = cut.conditional_mean(-1)?;
    Ok(below * above / (sigma * sigma))
}

impl GaussianCase1 {
    pub fn new(weights: Vec<f64>, sigma: f64) -> Result<Self> {
        check_weights(&weights)?;
        GaussianKnownVariance::new(sigma)?;
        Ok(Self { weights, sigma })
    }

    pub fn family(&self) -> GaussianKnownVariance {
        GaussianKnownVariance { sigma: self.sigma }
    }

    pub fn designs(&self, taus: &[f64]) -> Result<Vec<ObservationDesign>> {
        check_len(self.weights.len(), taus)?;
        let s2 = self.sigma * self.sigma;
        self.weights
            .iter()
            .zip(taus)
            .map(|(&w, &tau)| ObservationDesign::scalar(w / s2, tau))
            .collect()
    }

    /// Closed-form censored information `sum w^2 p^2 / (F (1 - F))`.
    pub fn fim(&self, alpha: f64, taus: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), taus)?;
        let mut acc = 0.0;
        for (&w, &tau) in self.weights.iter().zip(taus) {
            if w != 0.0 {
                acc += w * w * censoring_factor(w * alpha, self.sigma, tau)?;
            }
        }
        Ok(acc)
    }

    /// Uncensored information `sum w^2 / sigma^2`.
    pub fn uncensored_fim(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>() / (self.sigma * self.sigma)
    }

    /// Information-maximizing thresholds `tau_i = w_i alpha`.
    pub fn optimal_thresholds(&self, alpha: f64) -> Vec<f64> {
        self.weights.iter().map(|w| w * alpha).collect()
    }
}

/// Case 2: known means `mu_i`, unknown `theta = 1 / sigma^2`, `v_i = -1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCase2 {
    pub means: Vec<f64>,
}

impl GaussianCase2 {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        check_weights(&means)?;
        Ok(Self { means })
    }

    pub fn family(&self) -> GaussianKnownMean {
        GaussianKnownMean
    }

    pub fn designs(&self, taus: &[f64]) -> Result<Vec<ObservationDesign>> {
        check_len(self.means.len(), taus)?;
        self.means
            .iter()
            .zip(taus)
            .map(|(&mu, &tau)| ObservationDesign::with_offset(1, 1, &[-0.5], tau, mu))
            .collect()
    }

    /// Closed-form censored information `sum (sigma^4 / 4) (tau - mu)^2 p^2 / (F (1 - F))`.
    pub fn fim(&self, sigma: f64, taus: &[f64]) -> Result<f64> {
        check_len(self.means.len(), taus)?;
        let s4 = sigma.powi(4);
        let mut acc = 0.0;
        for (&mu, &tau) in self.means.iter().zip(taus) {
            let dev = tau - mu;
            if dev != 0.0 {
                acc += 0.25 * s4 * dev * dev * censoring_factor(mu, sigma, tau)?;
            }
        }
        Ok(acc)
    }

    /// Uncensored information `n sigma^4 / 2`.
    pub fn uncensored_fim(&self, sigma: f64) -> f64 {
        0.5 * self.means.len() as f64 * sigma.powi(4)
    }
}

/// Case 3: unknown mean and variance; `theta = (alpha / sigma^2, 1 / sigma^2)`,
/// `V_i = [[w_i, 0], [0, -1/2]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCase3 {
    pub weights: Vec<f64>,
}

/// Outcome of one clause of a positivity check.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Clause {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

/// Sufficient-condition report for positive definiteness of the
/// normalized Case-3 information.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PositivityReport {
    pub sup_weight: Clause,
    pub nonzero_fraction: Clause,
    pub min_eigenvalue: Clause,
}

impl PositivityReport {
    pub fn pass(&self) -> bool {
        self.sup_weight.pass && self.nonzero_fraction.pass && self.min_eigenvalue.pass
    }
}

impl GaussianCase3 {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(Self { weights })
    }

    pub fn family(&self) -> GaussianTwoParameter {
        GaussianTwoParameter
    }

    pub fn designs(&self, taus: &[f64]) -> Result<Vec<ObservationDesign>> {
        check_len(self.weights.len(), taus)?;
        self.weights
            .iter()
            .zip(taus)
            .map(|(&w, &tau)| ObservationDesign::new(2, 2, &[w, 0.0, 0.0, -0.5], tau))
            .collect()
    }

    /// `(alpha / sigma^2, 1 / sigma^2)`.
    pub fn natural(alpha: f64, sigma: f64) -> [f64; 2] {
        let prec = 1.0 / (sigma * sigma);
        [alpha * prec, prec]
    }

    /// `(alpha, sigma)` from natural coordinates.
    pub fn moment(theta: &[f64]) -> Result<(f64, f64)> {
        if !(theta[1] > 0.0) {
            return Err(Error::Domain {
                coordinate: 1,
                value: theta[1],
                constraint: "strictly positive",
            });
        }
        Ok((theta[0] / theta[1], theta[1].sqrt().recip()))
    }

    /// `(alpha, sigma^2)` from natural coordinates.
    pub fn moment_variance(theta: &[f64]) -> Result<(f64, f64)> {
        let (a, s) = Self::moment(theta)?;
        Ok((a, s * s))
    }

    /// Natural coordinates from `(alpha, sigma^2)`.
    pub fn natural_from_variance(alpha: f64, variance: f64) -> [f64; 2] {
        [alpha / variance, 1.0 / variance]
    }

    /// Per-observation rank-one terms of the closed-form censored
    /// information, row-major `2 x 2` each.
    pub fn fim_terms(&self, alpha: f64, sigma: f64, taus: &[f64]) -> Result<Vec<[f64; 4]>> {
        check_len(self.weights.len(), taus)?;
        let s4 = sigma.powi(4);
        self.weights
            .iter()
            .zip(taus)
            .map(|(&w, &tau)| {
                let mu = w * alpha;
                let c = s4 * censoring_factor(mu, sigma, tau)?;
                let u = tau + mu;
                let off = -0.5 * w * u * c;
                Ok([w * w * c, off, off, 0.25 * u * u * c])
            })
            .collect()
    }

    /// Closed-form censored information, row-major `2 x 2`.
    pub fn fim(&self, alpha: f64, sigma: f64, taus: &[f64]) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for t in self.fim_terms(alpha, sigma, taus)? {
            for (o, x) in out.iter_mut().zip(t) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Checks the sufficient conditions for `(1/n) J_n` to be positive definite:
    /// bounded weights, a non-vanishing share of nonzero weights, and the
    /// smallest eigenvalue of the assembled normalized information.
    pub fn positivity_check(&self, alpha: f64, sigma: f64, taus: &[f64]) -> Result<PositivityReport> {
        let n = self.weights.len();
        if n == 0 {
            return Err(Error::InvalidInput("no observations".into()));
        }
        let sup = self.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let nonzero = |ws: &[f64]| ws.iter().filter(|w| **w != 0.0).count() as f64 / ws.len().max(1) as f64;
        let frac = nonzero(&self.weights);
        let tail_frac = nonzero(&self.weights[n / 2..]);
        let j = self.fim(alpha, sigma, taus)?;
        let scaled: Vec<f64> = j.iter().map(|x| x / n as f64).collect();
        let min_eig = crate::linalg::min_eigenvalue(&scaled, 2);
        Ok(PositivityReport {
            sup_weight: Clause {
                name: "sup |w_i| finite".into(),
                value: sup,
                pass: sup.is_finite(),
            },
            nonzero_fraction: Clause {
                name: "fraction of nonzero w_i bounded away from 0".into(),
                value: frac.min(tail_frac),
                pass: frac > 0.0 && tail_frac > 0.0,
            },
            min_eigenvalue: Clause {
                name: "min eigenvalue of (1/n) J_n".into(),
                value: min_eig,
                pass: min_eig > crate::linalg::PSD_TOLERANCE,
            },
        })
    }
}

/// `E[X | B = b]` of the Case-1 model at one threshold; convenience for callers
/// that think in `(alpha, w, sigma)`.
pub fn case1_conditional_mean(w: f64, alpha: f64, sigma: f64, tau: f64, bit: Bit) -> Result<f64> {
    Ok(gaussian_conditional_moments(w * alpha, sigma, tau, bit)?.0)
}
