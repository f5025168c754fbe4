//! Poisson regression `X_i ~ Poisson(exp(v_i theta))` with `T = x`.
//!
//! With `m = floor(tau)` and `p_m = P(X = m)`, the conditional means are
//! `E[X | X <= m] = lambda (1 - p_m / F)` and
//! `E[X | X > m] = lambda (1 + p_m / (1 - F))`, so the shift is
//! `delta_b = -b lambda p_m / P(b)`. The variance shift follows from the
//! same telescoping: `Delta_b = delta_b (1 + m - lambda) - delta_b^2`.

use rand::RngCore;
use rand_distr::{Distribution, Poisson};
use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::expfam::{Bit, CensorSplit, CensoredDataset, ConditionalShift, ExpFamily, Moments, ObservationDesign, Stat};
use crate::special::{poisson_log_pmf, PoissonCut};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoissonFamily;

fn rate(eta: &[f64]) -> Result<f64> {
    let r = eta[0].exp();
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NaturalParameter(format!(
            "Poisson rate exp({}) is not representable",
            eta[0]
        )))
    }
}

impl ExpFamily for PoissonFamily {
    fn name(&self) -> &str {
        "poisson"
    }

    fn stat_dim(&self) -> usize {
        1
    }

    fn validate_threshold(&self, tau: f64) -> Result<()> {
        if tau.is_finite() && tau >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidThreshold {
                tau,
                reason: "Poisson thresholds must be finite and non-negative",
            })
        }
    }

    fn log_partition(&self, eta: &[f64]) -> Result<f64> {
        rate(eta)
    }

    fn base_measure(&self, x: f64) -> f64 {
        if x < 0.0 || x.fract() != 0.0 {
            0.0
        } else {
            (-libm::lgamma(x + 1.0)).exp()
        }
    }

    fn sufficient_statistic(&self, x: f64, _offset: f64) -> Stat {
        smallvec![x]
    }

    fn cdf(&self, x: f64, eta: &[f64], _offset: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        Ok(PoissonCut::new(rate(eta)?, x)?.lower)
    }

    fn split(&self, eta: &[f64], design: &ObservationDesign) -> Result<CensorSplit> {
        let cut = PoissonCut::new(rate(eta)?, design.tau())?;
        Ok(CensorSplit {
            below: cut.lower,
            above: cut.upper,
            log_below: cut.log_lower,
            log_above: cut.log_upper,
        })
    }

    fn conditional_shift(&self, eta: &[f64], design: &ObservationDesign, bit: Bit) -> Result<ConditionalShift> {
        let lambda = rate(eta)?;
        let cut = PoissonCut::new(lambda, design.tau())?;
        let log_side = match bit {
            Bit::Below => cut.log_lower,
            Bit::Above => cut.log_upper,
        };
        if log_side == f64::NEG_INFINITY {
            return Err(Error::Numerical(format!(
                "Poisson side {} has zero probability at rate {lambda}, tau {}",
                bit.sign(),
                design.tau()
            )));
        }
        // p_m / P(b) in log space keeps far tails finite
        let hazard = (poisson_log_pmf(cut.cut, lambda) - log_side).exp();
        let delta = -f64::from(bit.sign()) * lambda * hazard;
        let var = delta * (1.0 + cut.cut - lambda) - delta * delta;
        Ok(ConditionalShift {
            mean: smallvec![delta],
            cov: smallvec![var],
        })
    }

    fn moments(&self, eta: &[f64], _offset: f64) -> Result<Moments> {
        let l = rate(eta)?;
        Ok(Moments {
            mean: smallvec![l],
            cov: smallvec![l],
        })
    }

    fn third_abs_moment(&self, eta: &[f64], _offset: f64) -> Result<f64> {
        let l = rate(eta)?;
        Ok(l * l * l + 3.0 * l * l + l)
    }

    fn sample(&self, eta: &[f64], _offset: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let l = rate(eta)?;
        let dist = Poisson::new(l).map_err(|e| Error::Numerical(format!("Poisson({l}): {e}")))?;
        Ok(dist.sample(rng))
    }

    fn initial_guess(&self, data: &CensoredDataset) -> Option<Vec<f64>> {
        if data.param_dim() != 1 {
            return None;
        }
        let n = data.len() as f64;
        let mean_tau = data.designs().map(|d| d.tau()).sum::<f64>() / n;
        let mean_v = data.designs().map(|d| d.entry(0, 0)).sum::<f64>() / n;
        if mean_v.abs() < 1e-12 {
            return Some(vec![0.0]);
        }
        // rate at which the average threshold reproduces the observed fraction
        let target = data.below_fraction().clamp(0.5 / n, 1.0 - 0.5 / n);
        let (mut lo, mut hi) = (-10.0f64, 13.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match PoissonCut::new(mid.exp(), mean_tau) {
                Ok(c) if c.lower > target => lo = mid,
                _ => hi = mid,
            }
        }
        Some(vec![0.5 * (lo + hi) / mean_v])
    }

    fn monotone_scalar_likelihood(&self) -> bool {
        true
    }
}

/// Poisson regression with scalar covariates `v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonModel {
    pub covariates: Vec<f64>,
}

impl PoissonModel {
    pub fn new(covariates: Vec<f64>) -> Result<Self> {
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("covariates must be finite".into()));
        }
        Ok(Self { covariates })
    }

    pub fn family(&self) -> PoissonFamily {
        PoissonFamily
    }

    pub fn designs(&self, taus: &[f64]) -> Result<Vec<ObservationDesign>> {
        if taus.len() != self.covariates.len() {
            return Err(Error::InvalidInput(format!(
                "{} thresholds for {} observations",
                taus.len(),
                self.covariates.len()
            )));
        }
        self.covariates
            .iter()
            .zip(taus)
            .map(|(&v, &tau)| {
                PoissonFamily.validate_threshold(tau)?;
                ObservationDesign::scalar(v, tau)
            })
            .collect()
    }

    /// Closed-form censored information `sum v^2 lambda^2 p_m^2 / (F (1 - F))`.
    pub fn fim(&self, theta: f64, taus: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (index, d) in self.designs(taus)?.iter().enumerate() {
            let v = d.entry(0, 0);
            let lambda = (v * theta).exp();
            let cut = PoissonCut::new(lambda, d.tau())?;
            if !cut.log_lower.is_finite() || !cut.log_upper.is_finite() {
                return Err(Error::DegenerateThreshold {
                    index,
                    probability: cut.lower,
                });
            }
            if v == 0.0 {
                continue;
            }
            let lp = poisson_log_pmf(cut.cut, lambda);
            let ratio = (2.0 * lp - cut.log_lower - cut.log_upper).exp();
            acc += v * v * lambda * lambda * ratio;
        }
        Ok(acc)
    }

    /// Uncensored information `sum v^2 lambda`.
    pub fn uncensored_fim(&self, theta: f64) -> f64 {
        self.covariates.iter().map(|v| v * v * (v * theta).exp()).sum()
    }
}

/// `E[X | B = b]` for `X ~ Poisson(rate)` censored at `tau`.
pub fn poisson_conditional_mean(rate: f64, tau: f64, bit: Bit) -> Result<f64> {
    let design = ObservationDesign::scalar(1.0, tau)?;
    let shift = PoissonFamily.conditional_shift(&[rate.ln()], &design, bit)?;
    Ok(rate + shift.mean[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(rate: f64, tau: f64, bit: Bit) -> (f64, f64, f64) {
        let m = tau.floor() as u64;
        let (mut p, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for x in 0..(rate as u64 * 4 + 200) {
            let keep = (x <= m) == (bit == Bit::Below);
            if keep {
                let f = poisson_log_pmf(x as f64, rate).exp();
                p += f;
                s1 += f * x as f64;
                s2 += f * (x * x) as f64;
            }
        }
        let mean = s1 / p;
        (p, mean, s2 / p - mean * mean)
    }

    #[test]
    fn shifts_match_enumeration() {
        for &(rate, tau) in &[(3.0, 2.7), (0.4, 0.0), (12.0, 20.0), (50.0, 30.0)] {
            let d = ObservationDesign::scalar(1.0, tau).unwrap();
            let eta = [f64::ln(rate)];
            for bit in Bit::BOTH {
                let (p, mean, var) = brute(rate, tau, bit);
                let s = PoissonFamily.conditional_shift(&eta, &d, bit).unwrap();
                let split = PoissonFamily.split(&eta, &d).unwrap();
                assert!((split.prob(bit) - p).abs() < 1e-13, "prob {rate} {tau}");
                assert!(
                    (rate + s.mean[0] - mean).abs() < 1e-10 * mean.max(1.0),
                    "mean {rate} {tau}"
                );
                assert!((rate + s.cov[0] - var).abs() < 1e-9 * var.max(1.0), "var {rate} {tau}");
            }
        }
    }

    #[test]
    fn conditional_mean_known_value() {
        // lambda = 3, m = 2: E[X | X <= 2] = (3 + 2*4.5) / (1 + 3 + 4.5)
        let m = poisson_conditional_mean(3.0, 2.7, Bit::Below).unwrap();
        assert!((m - 12.0 / 8.5).abs() < 1e-14);
    }

    #[test]
    fn fim_matches_shift_variance() {
        let model = PoissonModel::new(vec![0.5, 1.0, 2.0]).unwrap();
        let taus = [1.0, 4.0, 2.5];
        let theta = 0.8;
        let j = model.fim(theta, &taus).unwrap();
        let mut oracle = 0.0;
        for (d, v) in model.designs(&taus).unwrap().iter().zip(&model.covariates) {
            let eta = [v * theta];
            let split = PoissonFamily.split(&eta, d).unwrap();
            for bit in Bit::BOTH {
                let s = PoissonFamily.conditional_shift(&eta, d, bit).unwrap();
                oracle += split.prob(bit) * (v * s.mean[0]).powi(2);
            }
        }
        assert!((j - oracle).abs() < 1e-12 * oracle);
        assert!(j < model.uncensored_fim(theta));
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(PoissonModel::new(vec![1.0]).unwrap().designs(&[-0.5]).is_err());
    }

    #[test]
    fn third_moment_formula() {
        let (l, mut acc) = (2.5f64, 0.0);
        for x in 0..200u64 {
            acc += poisson_log_pmf(x as f64, l).exp() * (x as f64).powi(3);
        }
        let m = PoissonFamily.third_abs_moment(&[l.ln()], 0.0).unwrap();
        assert!((m - acc).abs() < 1e-10 * acc);
    }
}
