//! Maximum-likelihood estimation from 1-bit censored observations of
//! exponential-family generalized linear models.
//!
//! Each observation `X_i` has natural parameter `eta_i = V_i theta` and is
//! reduced to a single bit: `+1` when `X_i <= tau_i`, `-1` otherwise. The
//! crate evaluates the censored likelihood and its derivatives, assembles
//! censored and uncensored Fisher information, fits `theta` by damped
//! Newton with multistart, and runs seeded Monte Carlo studies of the
//! resulting estimator.

// `!(x > 0.0)` is the NaN-rejecting form used for every domain check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod expfam;
pub mod fisher;
pub mod linalg;
pub mod montecarlo;
pub mod special;
pub mod zoo;

pub use error::{Error, Result};
