//! Maximum-likelihood fitting by damped Newton with multistart.
//!
//! Each start runs Newton's method on the censored log-likelihood. When
//! `-H` is not positive definite a diagonal shift is added until it is;
//! past a shift of `1e6` the step falls back to the gradient. A
//! backtracking line search keeps iterates inside the parameter domain
//! and enforces sufficient increase. Identical `(design, bit)` pairs are
//! collapsed first, so cost scales with the number of distinct designs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecutionMode};
use crate::expfam::{
    evaluate_aggregated, log_likelihood_aggregated, observation_score, AggregatedDataset, Bit, CensoredDataset,
    Constraint, ExpFamily, ParameterVector,
};
use crate::linalg;

/// `||theta||_2` beyond which an ascending fit is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e8;
const MAX_SHIFT: f64 = 1e6;
const JITTER_SCALE: f64 = 0.5;
const MAX_HALVINGS: usize = 80;
/// Observed information must have eigenvalues above `-this` at a converged fit.
pub const INFORMATION_TOLERANCE: f64 = 1e-8;

/// Where the optimizer starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPoints {
    /// Moment-style guess plus seeded jittered copies.
    #[default]
    Auto,
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Bound on `||score||_inf` at convergence.
    pub gradient_tolerance: f64,
    pub initial_points: InitialPoints,
    pub backtracking: f64,
    pub sufficient_increase: f64,
    pub multistart_count: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: ExecutionMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-9,
            initial_points: InitialPoints::Auto,
            backtracking: 0.5,
            sufficient_increase: 1e-4,
            multistart_count: 5,
            seed: 0,
            execution: ExecutionMode::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("fit config: {m}")));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.gradient_tolerance > 0.0) {
            return bad("gradient_tolerance must be positive");
        }
        if !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return bad("backtracking must lie in (0, 1)");
        }
        if !(self.sufficient_increase > 0.0 && self.sufficient_increase < 0.5) {
            return bad("sufficient_increase must lie in (0, 0.5)");
        }
        if self.multistart_count < 1 {
            return bad("multistart_count must be at least 1");
        }
        if let InitialPoints::Explicit(points) = &self.initial_points {
            if points.is_empty() {
                return bad("explicit initial_points must not be empty");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    NonIdentifiable,
    BoundaryDivergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: ParameterVector,
    pub converged: bool,
    pub iterations: usize,
    pub final_score_norm: f64,
    pub log_likelihood: f64,
    /// `-hessian` at `theta_hat`, row-major.
    pub observed_information: Vec<f64>,
    pub status: FitStatus,
    /// Which start produced this result.
    pub start_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

fn default_coordinate(c: Constraint) -> f64 {
    match c {
        Constraint::Unbounded => 0.0,
        Constraint::StrictlyPositive => 1.0,
        Constraint::StrictlyNegative => -1.0,
    }
}

/// Starting points: the family's moment-style guess (or a domain default)
/// followed by `multistart_count - 1` seeded jittered copies.
///
/// Jitter multiplies each nonzero coordinate by `exp(0.5 Z)`, which keeps
/// its sign and hence its domain; zero coordinates receive `0.5 Z`.
pub fn auto_initialize<F: ExpFamily + ?Sized>(
    family: &F,
    data: &CensoredDataset,
    config: &FitConfig,
) -> Vec<ParameterVector> {
    let k = data.param_dim();
    let domain = family.parameter_domain(k);
    let fallback: Vec<f64> = domain.iter().map(|&c| default_coordinate(c)).collect();
    let base = family
        .initial_guess(data)
        .filter(|g| g.len() == k && g.iter().zip(&domain).all(|(&x, &c)| c.admits(x)))
        .unwrap_or(fallback);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut starts = Vec::with_capacity(config.multistart_count);
    starts.push(ParameterVector::new(base.clone(), domain.clone()).expect("base start is admitted"));
    for _ in 1..config.multistart_count {
        let values: Vec<f64> = base
            .iter()
            .zip(&domain)
            .map(|(&x, &c)| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if x != 0.0 {
                    x * (JITTER_SCALE * z).exp()
                } else if c == Constraint::Unbounded {
                    JITTER_SCALE * z
                } else {
                    default_coordinate(c) * (JITTER_SCALE * z).exp()
                }
            })
            .collect();
        starts.push(ParameterVector::new(values, domain.clone()).expect("jitter preserves sign"));
    }
    starts
}

/// Rejects data whose likelihood is monotone along every path.
fn check_identifiable<F: ExpFamily + ?Sized>(family: &F, data: &AggregatedDataset, start: &[f64]) -> Result<()> {
    let groups = data.groups();
    let first = groups[0].observation.bit;
    if groups.iter().all(|g| g.observation.bit == first) {
        return Err(Error::NonIdentifiable(format!(
            "all {} bits equal {}; the likelihood increases without bound",
            data.len(),
            first.sign()
        )));
    }
    if start.len() == 1 && family.monotone_scalar_likelihood() {
        // Each term is monotone in theta with a sign that does not depend on theta.
        let (mut up, mut down) = (false, false);
        for g in groups {
            let s = observation_score(family, start, &g.observation.design, g.observation.bit)?[0];
            up |= s > 0.0;
            down |= s < 0.0;
        }
        if !(up && down) {
            return Err(Error::NonIdentifiable(
                "every observation pushes the parameter in the same direction; no finite maximizer".into(),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Candidate {
    theta: Vec<f64>,
    log_likelihood: f64,
    score_norm: f64,
    information: Vec<f64>,
    iterations: usize,
    status: FitStatus,
    message: Option<String>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Ascent direction from `(-H + mu I) d = g`, growing `mu` as needed.
fn newton_direction(score: &[f64], hessian: &[f64], k: usize) -> Vec<f64> {
    let neg: Vec<f64> = hessian.iter().map(|h| -h).collect();
    if let Some(d) = linalg::spd_solve(&neg, score, k) {
        return d;
    }
    let mut mu = 1e-8;
    while mu <= MAX_SHIFT {
        let mut shifted = neg.clone();
        for i in 0..k {
            shifted[i * k + i] += mu;
        }
        if let Some(d) = linalg::spd_solve(&shifted, score, k) {
            return d;
        }
        mu *= 10.0;
    }
    score.to_vec()
}

fn run_newton<F: ExpFamily + ?Sized>(
    family: &F,
    data: &AggregatedDataset,
    start: &ParameterVector,
    config: &FitConfig,
) -> Result<Candidate> {
    let k = start.len();
    let mut theta = start.values().to_vec();
    let mut eval = evaluate_aggregated(family, &theta, data, true)?;
    let finish = |theta: Vec<f64>, eval: &crate::expfam::Evaluation, iterations, status, message| Candidate {
        score_norm: inf_norm(&eval.score),
        information: eval.hessian.iter().map(|h| -h).collect(),
        log_likelihood: eval.log_likelihood,
        theta,
        iterations,
        status,
        message,
    };

    for iteration in 0..config.max_iterations {
        if inf_norm(&eval.score) <= config.gradient_tolerance {
            return Ok(finish(theta, &eval, iteration, FitStatus::Converged, None));
        }
        if l2_norm(&theta) > DIVERGENCE_NORM {
            return Ok(finish(
                theta,
                &eval,
                iteration,
                FitStatus::BoundaryDivergence,
                Some(format!(
                    "||theta|| exceeded {DIVERGENCE_NORM:e} with the likelihood still increasing"
                )),
            ));
        }

        let direction = newton_direction(&eval.score, &eval.hessian, k);
        let slope: f64 = direction.iter().zip(&eval.score).map(|(d, g)| d * g).sum();
        // below this the predicted gain is lost in the rounding of the likelihood
        let floor = 4.0 * f64::EPSILON * eval.log_likelihood.abs().max(1.0);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
            if start.admits(&trial) {
                if let Ok(ll) = log_likelihood_aggregated(family, &trial, data) {
                    let target = eval.log_likelihood + config.sufficient_increase * step * slope;
                    if ll >= target || (step * slope <= floor && ll >= eval.log_likelihood - floor) {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            step *= config.backtracking;
        }

        match accepted {
            Some(next) => match evaluate_aggregated(family, &next, data, true) {
                Ok(e) => {
                    theta = next;
                    eval = e;
                }
                Err(err) => {
                    return Ok(finish(
                        theta,
                        &eval,
                        iteration,
                        FitStatus::MaxIterations,
                        Some(err.to_string()),
                    ));
                }
            },
            None => {
                return Ok(finish(
                    theta,
                    &eval,
                    iteration,
                    FitStatus::MaxIterations,
                    Some("line search could not increase the likelihood".into()),
                ));
            }
        }
    }
    let status = if inf_norm(&eval.score) <= config.gradient_tolerance {
        FitStatus::Converged
    } else {
        FitStatus::MaxIterations
    };
    Ok(finish(theta, &eval, config.max_iterations, status, None))
}

/// Lexicographic comparison on `(-log_likelihood, ||theta||, theta)` with a
/// relative tolerance of `1e-12` on the likelihood.
fn better(a: &Candidate, b: &Candidate) -> bool {
    let scale = a.log_likelihood.abs().max(b.log_likelihood.abs()).max(1.0);
    let diff = a.log_likelihood - b.log_likelihood;
    if diff.abs() > 1e-12 * scale {
        return diff > 0.0;
    }
    let (na, nb) = (l2_norm(&a.theta), l2_norm(&b.theta));
    if na != nb {
        return na < nb;
    }
    for (x, y) in a.theta.iter().zip(&b.theta) {
        if x != y {
            return x < y;
        }
    }
    false
}

fn rank(status: FitStatus) -> u8 {
    match status {
        FitStatus::Converged => 0,
        FitStatus::NonIdentifiable => 1,
        FitStatus::MaxIterations => 2,
        FitStatus::BoundaryDivergence => 3,
    }
}

/// Fits `theta` by maximum likelihood.
///
/// Among starts, a converged candidate always beats a non-converged one;
/// within a class the highest likelihood wins, ties going to the smallest
/// norm and then the lexicographically smallest `theta`.
pub fn fit<F: ExpFamily + ?Sized>(family: &F, data: &CensoredDataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let k = data.param_dim();
    if data.stat_dim() != family.stat_dim() {
        return Err(Error::InvalidInput(format!(
            "{} expects d = {}, data has d = {}",
            family.name(),
            family.stat_dim(),
            data.stat_dim()
        )));
    }
    for d in data.designs() {
        family.validate_design(d)?;
    }
    let domain = family.parameter_domain(k);
    let starts = match &config.initial_points {
        InitialPoints::Auto => auto_initialize(family, data, config),
        InitialPoints::Explicit(points) => points
            .iter()
            .map(|p| ParameterVector::new(p.clone(), domain.clone()))
            .collect::<Result<Vec<_>>>()?,
    };
    let aggregated = data.aggregate();
    check_identifiable(family, &aggregated, starts[0].values())?;

    let outcomes = exec::map(config.execution, starts.len(), |i| {
        run_newton(family, &aggregated, &starts[i], config)
    });

    let mut best: Option<(usize, Candidate)> = None;
    let mut first_error = None;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let mut c = match outcome {
            Ok(c) => c,
            Err(e) => {
                first_error.get_or_insert(e);
                continue;
            }
        };
        if c.status == FitStatus::Converged && linalg::min_eigenvalue(&c.information, k) < -INFORMATION_TOLERANCE {
            c.status = FitStatus::NonIdentifiable;
            c.message = Some("stationary point is not a local maximum".into());
        }
        let replace = match &best {
            None => true,
            Some((_, b)) => match rank(c.status).cmp(&rank(b.status)) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => better(&c, b),
            },
        };
        if replace {
            best = Some((i, c));
        }
    }

    let (start_index, c) = match best {
        Some(b) => b,
        None => return Err(first_error.expect("every start failed")),
    };
    Ok(FitResult {
        theta_hat: ParameterVector::new(c.theta, domain)?,
        converged: c.status == FitStatus::Converged,
        iterations: c.iterations,
        final_score_norm: c.score_norm,
        log_likelihood: c.log_likelihood,
        observed_information: c.information,
        status: c.status,
        start_index,
        message: c.message,
    })
}

/// Number of `+1` and `-1` bits.
pub fn bit_counts(data: &CensoredDataset) -> (usize, usize) {
    let below = data.observations().iter().filter(|o| o.bit == Bit::Below).count();
    (below, data.len() - below)
}
