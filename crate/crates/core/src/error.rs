use thiserror::Error;

/// Errors raised by likelihood, information and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter coordinate {coordinate} = {value} violates constraint {constraint}")]
    Domain {
        coordinate: usize,
        value: f64,
        constraint: &'static str,
    },

    #[error("natural parameter outside the family's domain: {0}")]
    NaturalParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("observation {index} has zero probability under the current parameter")]
    DegenerateLikelihood { index: usize },

    #[error("threshold of observation {index} is degenerate (censored probability {probability})")]
    DegenerateThreshold { index: usize, probability: f64 },

    #[error("invalid threshold {tau}: {reason}")]
    InvalidThreshold { tau: f64, reason: &'static str },

    #[error("non-identifiable data: {0}")]
    NonIdentifiable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("experiment failed: {0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
