//! Index-ordered map over independent tasks, optionally on the rayon pool.
//!
//! Results always come back in index order and the first error by index
//! wins, so the outcome never depends on scheduling.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionMode {
    Sequential,
    /// Uses rayon when the `parallel` feature is on; sequential otherwise.
    Parallel,
}

impl Default for ExecutionMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecutionMode::Parallel
        } else {
            ExecutionMode::Sequential
        }
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map<T, F>(mode: ExecutionMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecutionMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Like [`map`], failing with the lowest-index error.
pub fn try_map<T, F>(mode: ExecutionMode, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map(mode, n, f).into_iter().collect()
}
