//! Concrete families and the named models built on them.

pub mod gaussian;
pub mod poisson;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::{
    Bit, CensorSplit, CensoredDataset, ConditionalShift, Constraint, ExpFamily, Moments, ObservationDesign, Stat,
};

pub use gaussian::{
    gaussian_conditional_moments, GaussianCase1, GaussianCase2, GaussianCase3, GaussianKnownMean,
    GaussianKnownVariance, GaussianTwoParameter, PositivityReport,
};
pub use poisson::{poisson_conditional_mean, PoissonFamily, PoissonModel};

/// Registry names, in the order they are listed to users.
pub const MODEL_NAMES: [&str; 4] = ["gaussian-case1", "gaussian-case2", "gaussian-case3", "poisson"];

/// Closed set of families, dispatched without boxing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyFamily {
    KnownVariance(GaussianKnownVariance),
    KnownMean(GaussianKnownMean),
    TwoParameter(GaussianTwoParameter),
    Poisson(PoissonFamily),
}

macro_rules! delegate {
    ($self:ident, $f:ident => $body:expr) => {
        match $self {
            AnyFamily::KnownVariance($f) => $body,
            AnyFamily::KnownMean($f) => $body,
            AnyFamily::TwoParameter($f) => $body,
            AnyFamily::Poisson($f) => $body,
        }
    };
}

impl ExpFamily for AnyFamily {
    fn name(&self) -> &str {
        delegate!(self, f => f.name())
    }
    fn stat_dim(&self) -> usize {
        delegate!(self, f => f.stat_dim())
    }
    fn parameter_domain(&self, k: usize) -> Vec<Constraint> {
        delegate!(self, f => f.parameter_domain(k))
    }
    fn validate_threshold(&self, tau: f64) -> Result<()> {
        delegate!(self, f => f.validate_threshold(tau))
    }
    fn validate_design(&self, design: &ObservationDesign) -> Result<()> {
        delegate!(self, f => f.validate_design(design))
    }
    fn log_partition(&self, eta: &[f64]) -> Result<f64> {
        delegate!(self, f => f.log_partition(eta))
    }
    fn base_measure(&self, x: f64) -> f64 {
        delegate!(self, f => f.base_measure(x))
    }
    fn sufficient_statistic(&self, x: f64, offset: f64) -> Stat {
        delegate!(self, f => f.sufficient_statistic(x, offset))
    }
    fn cdf(&self, x: f64, eta: &[f64], offset: f64) -> Result<f64> {
        delegate!(self, f => f.cdf(x, eta, offset))
    }
    fn split(&self, eta: &[f64], design: &ObservationDesign) -> Result<CensorSplit> {
        delegate!(self, f => f.split(eta, design))
    }
    fn conditional_shift(&self, eta: &[f64], design: &ObservationDesign, bit: Bit) -> Result<ConditionalShift> {
        delegate!(self, f => f.conditional_shift(eta, design, bit))
    }
    fn moments(&self, eta: &[f64], offset: f64) -> Result<Moments> {
        delegate!(self, f => f.moments(eta, offset))
    }
    fn third_abs_moment(&self, eta: &[f64], offset: f64) -> Result<f64> {
        delegate!(self, f => f.third_abs_moment(eta, offset))
    }
    fn sample(&self, eta: &[f64], offset: f64, rng: &mut dyn RngCore) -> Result<f64> {
        delegate!(self, f => f.sample(eta, offset, rng))
    }
    fn initial_guess(&self, data: &CensoredDataset) -> Option<Vec<f64>> {
        delegate!(self, f => f.initial_guess(data))
    }
    fn monotone_scalar_likelihood(&self) -> bool {
        delegate!(self, f => f.monotone_scalar_likelihood())
    }
}

/// A named model: family, canonical design map and coordinate conventions.
///
/// Every model is driven by per-observation scalar weights `w_i` and
/// thresholds `tau_i`:
///
/// | model | `theta` | moment coordinates | design |
/// |---|---|---|---|
/// | `gaussian-case1` | `alpha` | `alpha` | `V = w / sigma^2` |
/// | `gaussian-case2` | `1 / sigma^2` | `sigma` | `V = -1/2`, mean `w alpha` |
/// | `gaussian-case3` | `(alpha, 1) / sigma^2` | `(alpha, sigma)` | `[[w, 0], [0, -1/2]]` |
/// | `poisson` | `theta` | `exp(theta)` | `V = w` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Model {
    #[serde(rename = "gaussian-case1")]
    GaussianCase1 {
        sigma: f64,
    },
    #[serde(rename = "gaussian-case2")]
    GaussianCase2 {
        alpha: f64,
    },
    #[serde(rename = "gaussian-case3")]
    GaussianCase3,
    Poisson,
}

impl Model {
    /// Builds a model from its registry name; `sigma` is needed by Case 1
    /// and `alpha` by Case 2.
    pub fn from_name(name: &str, alpha: Option<f64>, sigma: Option<f64>) -> Result<Self> {
        match name {
            "gaussian-case1" => {
                let sigma = sigma.unwrap_or(1.0);
                GaussianKnownVariance::new(sigma)?;
                Ok(Model::GaussianCase1 { sigma })
            }
            "gaussian-case2" => {
                let alpha =
                    alpha.ok_or_else(|| Error::InvalidInput("gaussian-case2 needs the known location alpha".into()))?;
                if !alpha.is_finite() {
                    return Err(Error::InvalidInput("alpha must be finite".into()));
                }
                Ok(Model::GaussianCase2 { alpha })
            }
            "gaussian-case3" => Ok(Model::GaussianCase3),
            "poisson" => Ok(Model::Poisson),
            other => Err(Error::InvalidInput(format!(
                "unknown model '{other}'; expected one of {}",
                MODEL_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::GaussianCase1 { .. } => "gaussian-case1",
            Model::GaussianCase2 { .. } => "gaussian-case2",
            Model::GaussianCase3 => "gaussian-case3",
            Model::Poisson => "poisson",
        }
    }

    pub fn family(&self) -> AnyFamily {
        match *self {
            Model::GaussianCase1 { sigma } => AnyFamily::KnownVariance(GaussianKnownVariance { sigma }),
            Model::GaussianCase2 { .. } => AnyFamily::KnownMean(GaussianKnownMean),
            Model::GaussianCase3 => AnyFamily::TwoParameter(GaussianTwoParameter),
            Model::Poisson => AnyFamily::Poisson(PoissonFamily),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            Model::GaussianCase3 => 2,
            _ => 1,
        }
    }

    pub fn parameter_domain(&self) -> Vec<Constraint> {
        self.family().parameter_domain(self.param_dim())
    }

    /// Design of one observation with weight `w` and threshold `tau`.
    pub fn design(&self, w: f64, tau: f64) -> Result<ObservationDesign> {
        let family = self.family();
        family.validate_threshold(tau)?;
        match *self {
            Model::GaussianCase1 { sigma } => ObservationDesign::scalar(w / (sigma * sigma), tau),
            Model::GaussianCase2 { alpha } => ObservationDesign::with_offset(1, 1, &[-0.5], tau, w * alpha),
            Model::GaussianCase3 => ObservationDesign::new(2, 2, &[w, 0.0, 0.0, -0.5], tau),
            Model::Poisson => ObservationDesign::scalar(w, tau),
        }
    }

    pub fn designs(&self, weights: &[f64], taus: &[f64]) -> Result<Vec<ObservationDesign>> {
        if weights.len() != taus.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} thresholds",
                weights.len(),
                taus.len()
            )));
        }
        weights.iter().zip(taus).map(|(&w, &t)| self.design(w, t)).collect()
    }

    /// Natural `theta` from moment coordinates.
    pub fn natural_from_moment(&self, moment: &[f64]) -> Result<Vec<f64>> {
        self.check_len(moment)?;
        match self {
            Model::GaussianCase1 { .. } => Ok(moment.to_vec()),
            Model::GaussianCase2 { .. } => {
                positive(moment[0], 0)?;
                Ok(vec![1.0 / (moment[0] * moment[0])])
            }
            Model::GaussianCase3 => {
                positive(moment[1], 1)?;
                Ok(GaussianCase3::natural(moment[0], moment[1]).to_vec())
            }
            Model::Poisson => {
                positive(moment[0], 0)?;
                Ok(vec![moment[0].ln()])
            }
        }
    }

    /// Moment coordinates from natural `theta`.
    pub fn moment_from_natural(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        match self {
            Model::GaussianCase1 { .. } => Ok(theta.to_vec()),
            Model::GaussianCase2 { .. } => {
                positive(theta[0], 0)?;
                Ok(vec![theta[0].sqrt().recip()])
            }
            Model::GaussianCase3 => {
                let (a, s) = GaussianCase3::moment(theta)?;
                Ok(vec![a, s])
            }
            Model::Poisson => Ok(vec![theta[0].exp()]),
        }
    }

    /// Labels of the moment coordinates.
    pub fn moment_labels(&self) -> &'static [&'static str] {
        match self {
            Model::GaussianCase1 { .. } => &["alpha"],
            Model::GaussianCase2 { .. } => &["sigma"],
            Model::GaussianCase3 => &["alpha", "sigma"],
            Model::Poisson => &["lambda"],
        }
    }

    /// Closed-form censored information at natural `theta`, row-major `k x k`.
    pub fn closed_form_fim(&self, theta: &[f64], weights: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        match *self {
            Model::GaussianCase1 { sigma } => {
                Ok(vec![GaussianCase1::new(weights.to_vec(), sigma)?.fim(theta[0], taus)?])
            }
            Model::GaussianCase2 { alpha } => {
                let sigma = self.moment_from_natural(theta)?[0];
                let means = weights.iter().map(|w| w * alpha).collect();
                Ok(vec![GaussianCase2::new(means)?.fim(sigma, taus)?])
            }
            Model::GaussianCase3 => {
                let (a, s) = GaussianCase3::moment(theta)?;
                Ok(GaussianCase3::new(weights.to_vec())?.fim(a, s, taus)?.to_vec())
            }
            Model::Poisson => Ok(vec![PoissonModel::new(weights.to_vec())?.fim(theta[0], taus)?]),
        }
    }

    /// Uncensored information at natural `theta`, row-major `k x k`.
    pub fn closed_form_uncensored_fim(&self, theta: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        match *self {
            Model::GaussianCase1 { sigma } => Ok(vec![GaussianCase1::new(weights.to_vec(), sigma)?.uncensored_fim()]),
            Model::GaussianCase2 { .. } => {
                let sigma = self.moment_from_natural(theta)?[0];
                Ok(vec![0.5 * weights.len() as f64 * sigma.powi(4)])
            }
            Model::GaussianCase3 => {
                // V^T Cov(T) V summed; Cov(T) in (x, x^2) at mean w alpha
                let (a, s) = GaussianCase3::moment(theta)?;
                let s2 = s * s;
                let mut out = vec![0.0; 4];
                for &w in weights {
                    let mu = w * a;
                    let c = [s2, 2.0 * mu * s2, 2.0 * mu * s2, 2.0 * s2 * s2 + 4.0 * mu * mu * s2];
                    let v = [w, -0.5];
                    for r in 0..2 {
                        for q in 0..2 {
                            out[r * 2 + q] += v[r] * c[r * 2 + q] * v[q];
                        }
                    }
                }
                Ok(out)
            }
            Model::Poisson => Ok(vec![PoissonModel::new(weights.to_vec())?.uncensored_fim(theta[0])]),
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.param_dim() {
            return Err(Error::InvalidInput(format!(
                "{} has {} parameters, got {}",
                self.name(),
                self.param_dim(),
                v.len()
            )));
        }
        Ok(())
    }
}

fn positive(x: f64, coordinate: usize) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            coordinate,
            value: x,
            constraint: "strictly positive",
        })
    }
}

/// Information-maximizing Case-1 thresholds `tau_i = w_i alpha`.
pub fn case1_optimal_thresholds(weights: &[f64], alpha: f64) -> Vec<f64> {
    weights.iter().map(|w| w * alpha).collect()
}
