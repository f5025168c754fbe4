//! Fisher information for censored and uncensored observations.
//!
//! The censored information of one observation is `V^T Cov(E[T | B]) V`.
//! Because `B` takes two values, `Cov(E[T | B])` is the exact two-point
//! sum `sum_b P(b) delta_b delta_b^T` over the conditional mean shifts, so
//! nothing is integrated numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecutionMode};
use crate::expfam::{
    observation_hessian, observation_score, Bit, CensorSplit, ExpFamily, ObservationDesign, COMPENSATION_THRESHOLD,
};
use crate::linalg;
use crate::special::Accumulator;

/// A `k x k` information matrix with its spectral summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FimResult {
    pub k: usize,
    /// Row-major, exactly symmetric.
    pub matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_observation: Option<Vec<Vec<f64>>>,
    pub min_eigenvalue: f64,
    pub determinant: f64,
}

impl FimResult {
    pub fn new(mut matrix: Vec<f64>, k: usize, per_observation: Option<Vec<Vec<f64>>>) -> Self {
        crate::expfam::symmetrize(&mut matrix, k);
        let min_eigenvalue = linalg::min_eigenvalue(&matrix, k);
        let determinant = linalg::determinant(&matrix, k);
        Self {
            k,
            matrix,
            per_observation,
            min_eigenvalue,
            determinant,
        }
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -linalg::PSD_TOLERANCE
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.matrix[r * self.k + c]
    }

    /// `J^{-1}`; fails when the matrix is singular.
    pub fn inverse(&self) -> Result<Vec<f64>> {
        linalg::spd_inverse(&self.matrix, self.k)
            .map_err(|_| Error::NonIdentifiable("information matrix is singular".into()))
    }

    /// Matrix scaled by `1 / n`.
    pub fn normalized(&self, n: usize) -> Vec<f64> {
        self.matrix.iter().map(|x| x / n as f64).collect()
    }
}

fn check_inputs<F: ExpFamily + ?Sized>(family: &F, theta: &[f64], designs: &[ObservationDesign]) -> Result<usize> {
    let first = designs
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one design is required".into()))?;
    let k = first.param_dim();
    if theta.len() != k {
        return Err(Error::InvalidInput(format!(
            "parameter has k = {}, designs expect {k}",
            theta.len()
        )));
    }
    for (coordinate, (&value, c)) in theta.iter().zip(family.parameter_domain(k)).enumerate() {
        if !c.admits(value) {
            return Err(Error::Domain {
                coordinate,
                value,
                constraint: c.label(),
            });
        }
    }
    for (i, d) in designs.iter().enumerate() {
        if d.param_dim() != k || d.stat_dim() != family.stat_dim() {
            return Err(Error::InvalidInput(format!("design {i} has a different shape")));
        }
        family.validate_design(d)?;
    }
    Ok(k)
}

/// The split at observation `index`, rejecting thresholds where one side
/// has no representable probability.
fn nondegenerate_split<F: ExpFamily + ?Sized>(
    family: &F,
    eta: &[f64],
    design: &ObservationDesign,
    index: usize,
) -> Result<CensorSplit> {
    let split = family.split(eta, design)?;
    if !(split.below.min(split.above) >= f64::MIN_POSITIVE) {
        return Err(Error::DegenerateThreshold {
            index,
            probability: split.below,
        });
    }
    Ok(split)
}

fn reduce(terms: &[Vec<f64>], k: usize) -> Vec<f64> {
    let compensated = terms.len() > COMPENSATION_THRESHOLD;
    let mut acc = vec![Accumulator::new(compensated); k * k];
    for t in terms {
        for (a, x) in acc.iter_mut().zip(t) {
            a.add(*x);
        }
    }
    acc.iter().map(Accumulator::value).collect()
}

fn assemble<F>(
    designs: &[ObservationDesign],
    k: usize,
    keep_terms: bool,
    mode: ExecutionMode,
    term: F,
) -> Result<FimResult>
where
    F: Fn(usize, &ObservationDesign) -> Result<Vec<f64>> + Sync + Send,
{
    let terms = exec::try_map(mode, designs.len(), |i| term(i, &designs[i]))?;
    let matrix = reduce(&terms, k);
    Ok(FimResult::new(matrix, k, keep_terms.then_some(terms)))
}

/// Censored information of one observation: `V^T (sum_b P(b) delta_b delta_b^T) V`.
pub fn observation_fim<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    design: &ObservationDesign,
    index: usize,
) -> Result<Vec<f64>> {
    let (d, k) = (design.stat_dim(), design.param_dim());
    let eta = design.natural_parameter(theta);
    let split = nondegenerate_split(family, &eta, design, index)?;
    let mut cov = vec![0.0; d * d];
    for bit in Bit::BOTH {
        let shift = family.conditional_shift(&eta, design, bit)?;
        let p = split.prob(bit);
        for r in 0..d {
            for c in 0..d {
                cov[r * d + c] += p * shift.mean[r] * shift.mean[c];
            }
        }
    }
    let mut out = vec![0.0; k * k];
    design.add_congruence(&cov, 1.0, &mut out);
    Ok(out)
}

/// Censored information `J_n = sum_i V_i^T Cov(E[T | B_i]) V_i`.
pub fn fim_censored<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
) -> Result<FimResult> {
    fim_censored_with(family, theta, designs, false, ExecutionMode::default())
}

/// [`fim_censored`] with control over per-observation terms and execution.
pub fn fim_censored_with<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
    keep_terms: bool,
    mode: ExecutionMode,
) -> Result<FimResult> {
    let k = check_inputs(family, theta, designs)?;
    assemble(designs, k, keep_terms, mode, |i, d| {
        observation_fim(family, theta, d, i)
    })
}

/// Uncensored information `I_n = sum_i V_i^T Cov(T) V_i`.
pub fn fim_uncensored<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
) -> Result<FimResult> {
    let k = check_inputs(family, theta, designs)?;
    assemble(designs, k, false, ExecutionMode::default(), |_, d| {
        let eta = d.natural_parameter(theta);
        let m = family.moments(&eta, d.offset())?;
        let mut out = vec![0.0; k * k];
        d.add_congruence(&m.cov, 1.0, &mut out);
        Ok(out)
    })
}

/// `E[score score^T]` by enumerating both bits and calling the
/// single-observation score; an independent path to [`fim_censored`].
pub fn fim_numeric_oracle<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
) -> Result<FimResult> {
    let k = check_inputs(family, theta, designs)?;
    assemble(designs, k, false, ExecutionMode::Sequential, |i, d| {
        let eta = d.natural_parameter(theta);
        let split = nondegenerate_split(family, &eta, d, i)?;
        let mut out = vec![0.0; k * k];
        for bit in Bit::BOTH {
            let s = observation_score(family, theta, d, bit)?;
            let p = split.prob(bit);
            for r in 0..k {
                for c in 0..k {
                    out[r * k + c] += p * s[r] * s[c];
                }
            }
        }
        Ok(out)
    })
}

/// `-E[hessian]` by enumerating both bits; equals the information by the
/// information-matrix equality.
pub fn expected_negative_hessian<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
) -> Result<FimResult> {
    let k = check_inputs(family, theta, designs)?;
    assemble(designs, k, false, ExecutionMode::Sequential, |i, d| {
        let eta = d.natural_parameter(theta);
        let split = nondegenerate_split(family, &eta, d, i)?;
        let mut out = vec![0.0; k * k];
        for bit in Bit::BOTH {
            let h = observation_hessian(family, theta, d, bit)?;
            let p = split.prob(bit);
            for (o, x) in out.iter_mut().zip(&h) {
                *o -= p * x;
            }
        }
        Ok(out)
    })
}

/// Outcome of the data-processing-inequality check `I_n - J_n >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpiReport {
    pub censored: FimResult,
    pub uncensored: FimResult,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

pub fn dpi_check<F: ExpFamily + ?Sized>(family: &F, theta: &[f64], designs: &[ObservationDesign]) -> Result<DpiReport> {
    let censored = fim_censored(family, theta, designs)?;
    let uncensored = fim_uncensored(family, theta, designs)?;
    Ok(dpi_from(censored, uncensored))
}

/// DPI report from already-computed matrices.
pub fn dpi_from(censored: FimResult, uncensored: FimResult) -> DpiReport {
    let k = censored.k;
    let diff: Vec<f64> = uncensored
        .matrix
        .iter()
        .zip(&censored.matrix)
        .map(|(i, j)| i - j)
        .collect();
    let min_eigenvalue = linalg::min_eigenvalue(&diff, k);
    DpiReport {
        censored,
        uncensored,
        min_eigenvalue,
        pass: min_eigenvalue >= -linalg::PSD_TOLERANCE,
    }
}

/// Entrywise relative error `|a - b| / max(|a|, |b|, sqrt(a_rr a_cc))`.
///
/// Off-diagonal entries of an information matrix can vanish while the
/// matrix itself is large; the diagonal scale keeps such entries from
/// reporting spurious relative error.
pub fn relative_error(a: &[f64], b: &[f64], k: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..k {
        for c in 0..k {
            let (x, y) = (a[r * k + c], b[r * k + c]);
            let diag = (a[r * k + r].abs() * a[c * k + c].abs()).sqrt();
            let scale = x.abs().max(y.abs()).max(diag);
            if scale > 0.0 {
                worst = worst.max((x - y).abs() / scale);
            } else if x != y {
                return f64::INFINITY;
            }
        }
    }
    worst
}
