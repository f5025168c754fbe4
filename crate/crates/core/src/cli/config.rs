//! TOML schemas for the CLI. Every table rejects unknown keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::FitConfig;
use crate::exec::ExecutionMode;
use crate::montecarlo::{DesignRule, ErrorMetric, EstimatorKind, ExperimentConfig, ThresholdRule};
use crate::zoo::Model;

/// `[model]`: registry name plus whatever parameters the model needs.
///
/// | model | known | truth |
/// |---|---|---|
/// | `gaussian-case1` | `sigma` | `alpha` |
/// | `gaussian-case2` | `alpha` (means are `w_i alpha`) | `sigma` |
/// | `gaussian-case3` | | `alpha`, `sigma` |
/// | `poisson` | | `lambda` (or `theta`) |
///
/// `theta` gives the truth directly in natural coordinates and wins over
/// the moment keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub theta: Option<Vec<f64>>,
}

impl ModelSection {
    pub fn model(&self) -> Result<Model> {
        Model::from_name(&self.name, self.alpha, self.sigma)
    }

    /// Moment-coordinate truth, when the section fixes one.
    fn moment_truth(&self) -> Option<Vec<f64>> {
        match self.name.as_str() {
            "gaussian-case1" => self.alpha.map(|a| vec![a]),
            "gaussian-case2" => self.sigma.map(|s| vec![s]),
            "gaussian-case3" => Some(vec![self.alpha?, self.sigma?]),
            "poisson" => self.lambda.map(|l| vec![l]),
            _ => None,
        }
    }

    /// True parameter in natural coordinates.
    pub fn truth(&self) -> Result<Vec<f64>> {
        let model = self.model()?;
        if let Some(theta) = &self.theta {
            if theta.len() != model.param_dim() {
                return Err(Error::InvalidInput(format!(
                    "[model] theta has {} entries, {} needs {}",
                    theta.len(),
                    model.name(),
                    model.param_dim()
                )));
            }
            return Ok(theta.clone());
        }
        let moment = self.moment_truth().ok_or_else(|| {
            Error::InvalidInput(format!(
                "[model] does not fix the parameter of {}; give {} or theta",
                model.name(),
                model.moment_labels().join(" and ")
            ))
        })?;
        model.natural_from_moment(&moment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Scalar(f64),
    List(Vec<f64>),
}

impl Default for Weights {
    fn default() -> Self {
        Weights::Scalar(1.0)
    }
}

impl Weights {
    pub fn as_list(&self) -> Vec<f64> {
        match self {
            Weights::Scalar(w) => vec![*w],
            Weights::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    List(Vec<f64>),
    /// Only `"optimal"` is accepted.
    Keyword(String),
}

/// Grid of common thresholds applied to every observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub low: f64,
    pub high: f64,
    pub steps: usize,
}

/// `[design]` of a fixed set of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    #[serde(default)]
    pub weights: Weights,
    pub thresholds: Option<Thresholds>,
    /// Number of observations; lists are cycled up to it. Defaults to the
    /// longer of the two lists.
    pub n: Option<usize>,
}

impl DesignSection {
    /// `(weights, thresholds)` expanded to `n` observations.
    pub fn expand(&self, model: &Model, truth: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        let w = self.weights.as_list();
        if w.is_empty() {
            return Err(Error::InvalidInput("[design] weights must not be empty".into()));
        }
        let taus = match &self.thresholds {
            None => return Err(Error::InvalidInput("[design] thresholds are required".into())),
            Some(Thresholds::List(t)) if t.is_empty() => {
                return Err(Error::InvalidInput("[design] thresholds must not be empty".into()))
            }
            Some(Thresholds::List(t)) => Some(t.clone()),
            Some(Thresholds::Keyword(k)) if k == "optimal" => None,
            Some(Thresholds::Keyword(k)) => {
                return Err(Error::InvalidInput(format!(
                    "[design] thresholds must be a list or \"optimal\", got \"{k}\""
                )))
            }
        };
        let n = self.n.unwrap_or(w.len().max(taus.as_ref().map_or(0, Vec::len)));
        if n == 0 {
            return Err(Error::InvalidInput("[design] n must be at least 1".into()));
        }
        let weights: Vec<f64> = (0..n).map(|i| w[i % w.len()]).collect();
        let thresholds = match taus {
            Some(t) => (0..n).map(|i| t[i % t.len()]).collect(),
            None => {
                let alpha = match (model, truth) {
                    (Model::GaussianCase1 { .. }, Some(theta)) => theta[0],
                    _ => {
                        return Err(Error::InvalidInput(
                            "\"optimal\" thresholds need gaussian-case1 with a known alpha".into(),
                        ))
                    }
                };
                crate::zoo::case1_optimal_thresholds(&weights, alpha)
            }
        };
        Ok((weights, thresholds))
    }
}

/// Config for `fim` and `check-conditions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FimConfig {
    pub model: ModelSection,
    pub design: DesignSection,
    pub sweep: Option<Sweep>,
}

/// Config for `fit`; the data file supplies thresholds and designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFileConfig {
    pub model: ModelSection,
    /// Weights only matter for `gaussian-case2`, whose means are `w_i alpha`.
    #[serde(default)]
    pub design: Option<FitDesignSection>,
    #[serde(default)]
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDesignSection {
    #[serde(default)]
    pub weights: Weights,
}

/// One `[[experiment]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub model: ModelSection,
    pub design: ExperimentDesign,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub metric: ErrorMetric,
    #[serde(default)]
    pub fit: FitConfig,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub sample_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDesign {
    #[serde(default)]
    pub weights: Weights,
    pub thresholds: ThresholdRule,
}

/// Config for `simulate`: shared defaults plus experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub trials: usize,
    pub sample_sizes: Vec<usize>,
    pub experiment: Vec<ExperimentSection>,
}

impl SimulationConfig {
    /// Resolved experiments; `seed_override` replaces every seed.
    pub fn experiments(&self, seed_override: Option<u64>) -> Result<Vec<ExperimentConfig>> {
        if self.experiment.is_empty() {
            return Err(Error::InvalidInput("at least one [[experiment]] is required".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        self.experiment
            .iter()
            .map(|e| {
                if !names.insert(e.name.clone()) {
                    return Err(Error::InvalidInput(format!("duplicate experiment name '{}'", e.name)));
                }
                if e.name.is_empty() || e.name.contains(['/', '\\']) || e.name.starts_with('.') {
                    return Err(Error::InvalidInput(format!(
                        "experiment name '{}' is not a file stem",
                        e.name
                    )));
                }
                let model = e.model.model()?;
                let truth = e.model.truth()?;
                let cfg = ExperimentConfig {
                    name: e.name.clone(),
                    truth: model.moment_from_natural(&truth)?,
                    model,
                    design: DesignRule {
                        weights: e.design.weights.as_list(),
                        thresholds: e.design.thresholds.clone(),
                    },
                    sample_sizes: e.sample_sizes.clone().unwrap_or_else(|| self.sample_sizes.clone()),
                    trials: e.trials.unwrap_or(self.trials),
                    seed: seed_override.or(e.seed).unwrap_or(self.seed),
                    estimator: e.estimator,
                    metric: e.metric,
                    fit: e.fit.clone(),
                    execution: ExecutionMode::default(),
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}
