//! Seeded Monte Carlo experiments: data generation, repeated fits, MSE
//! curves, empirical asymptotic normality and the regularity-condition
//! checker.
//!
//! Every trial owns two ChaCha8 substreams keyed by `(seed, n, trial)`,
//! one for the design and one for the data, so results do not depend on
//! how trials are scheduled. Reductions always run in trial order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig, FitStatus};
use crate::exec::{self, ExecutionMode};
use crate::expfam::{observation_third_derivative, Bit, CensoredDataset, ExpFamily, ObservationDesign};
use crate::fisher::fim_censored_with;
use crate::linalg;
use crate::zoo::Model;

/// Largest tolerated share of failed trials.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;
/// Standardized `E|Z|^3` of a standard normal, `2 sqrt(2 / pi)`.
pub const GAUSSIAN_THIRD_ABS_MOMENT: f64 = 1.595_769_121_605_731;

const DESIGN_STREAM: u64 = 1;
const DATA_STREAM: u64 = 2;
const FIT_STREAM: u64 = 3;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent generator for `(seed, n, trial, purpose)`.
pub fn substream(seed: u64, n: usize, trial: usize, purpose: u64) -> ChaCha8Rng {
    let a = splitmix(seed);
    let b = splitmix(a ^ n as u64);
    let c = splitmix(b ^ trial as u64);
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([a, b, c, splitmix(c)]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(purpose);
    rng
}

/// How thresholds are assigned to observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThresholdRule {
    /// Cycles through the list.
    Fixed {
        values: Vec<f64>,
    },
    /// Independent draws from a finite distribution.
    Mixture {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// `tau_i = w_i alpha` (known-variance Gaussian only).
    Optimal,
}

impl ThresholdRule {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("threshold rule: {m}")));
        match self {
            ThresholdRule::Fixed { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return bad("fixed values must be a non-empty list of finite numbers".into());
                }
            }
            ThresholdRule::Mixture { values, probabilities } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return bad("mixture needs equally many values and probabilities".into());
                }
                if values.iter().any(|v| !v.is_finite()) || probabilities.iter().any(|p| !(*p >= 0.0)) {
                    return bad("mixture values must be finite and probabilities non-negative".into());
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture probabilities sum to {total}, not 1"));
                }
            }
            ThresholdRule::Uniform { low, high } => {
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return bad("uniform needs finite low < high".into());
                }
            }
            ThresholdRule::Normal { mean, sd } => {
                if !mean.is_finite() || !(*sd > 0.0) || !sd.is_finite() {
                    return bad("normal needs a finite mean and positive sd".into());
                }
            }
            ThresholdRule::Optimal => {}
        }
        Ok(())
    }

    fn draw(&self, i: usize, w: f64, truth_natural: &[f64], model: &Model, rng: &mut dyn RngCore) -> Result<f64> {
        Ok(match self {
            ThresholdRule::Fixed { values } => values[i % values.len()],
            ThresholdRule::Mixture { values, probabilities } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = values.len() - 1;
                for (j, p) in probabilities.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = j;
                        break;
                    }
                }
                values[pick]
            }
            ThresholdRule::Uniform { low, high } => Uniform::new(*low, *high)
                .map_err(|e| Error::InvalidInput(e.to_string()))?
                .sample(rng),
            ThresholdRule::Normal { mean, sd } => Normal::new(*mean, *sd)
                .map_err(|e| Error::InvalidInput(e.to_string()))?
                .sample(rng),
            ThresholdRule::Optimal => match model {
                Model::GaussianCase1 { .. } => w * truth_natural[0],
                other => {
                    return Err(Error::InvalidInput(format!(
                        "optimal thresholds are only defined for gaussian-case1, not {}",
                        other.name()
                    )))
                }
            },
        })
    }
}

/// Which estimator a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// MLE from the bits.
    #[default]
    Censored,
    /// Closed-form MLE from the raw draws; the baseline.
    Uncensored,
}

/// Coordinates in which squared error is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    Natural,
    #[default]
    Moment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRule {
    /// Cycled over observations.
    pub weights: Vec<f64>,
    pub thresholds: ThresholdRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: Model,
    /// True parameter in moment coordinates.
    pub truth: Vec<f64>,
    pub design: DesignRule,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub metric: ErrorMetric,
    pub fit: FitConfig,
    #[serde(skip)]
    pub execution: ExecutionMode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes[0] < 1 {
            return Err(Error::InvalidInput(
                "sample_sizes must be a non-empty list of positive sizes".into(),
            ));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("sample_sizes must be strictly increasing".into()));
        }
        if self.design.weights.is_empty() || self.design.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "weights must be a non-empty list of finite numbers".into(),
            ));
        }
        self.design.thresholds.validate()?;
        self.fit.validate()?;
        self.truth_natural()?;
        Ok(())
    }

    pub fn truth_natural(&self) -> Result<Vec<f64>> {
        self.model.natural_from_moment(&self.truth)
    }

    /// Designs of the `trial`-th dataset of size `n`.
    pub fn draw_designs(&self, n: usize, trial: usize) -> Result<Vec<ObservationDesign>> {
        let truth = self.truth_natural()?;
        let mut rng = substream(self.seed, n, trial, DESIGN_STREAM);
        let weights = &self.design.weights;
        (0..n)
            .map(|i| {
                let w = weights[i % weights.len()];
                let tau = self.design.thresholds.draw(i, w, &truth, &self.model, &mut rng)?;
                self.model.design(w, tau)
            })
            .collect()
    }

    fn error_coordinates(&self, natural: &[f64]) -> Result<Vec<f64>> {
        match self.metric {
            ErrorMetric::Natural => Ok(natural.to_vec()),
            ErrorMetric::Moment => self.model.moment_from_natural(natural),
        }
    }
}

/// Draws `X_i` at `theta` and censors each against its threshold.
/// Returns the raw draws alongside the dataset.
pub fn generate_and_censor<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
    rng: &mut dyn RngCore,
) -> Result<(CensoredDataset, Vec<f64>)> {
    let mut xs = Vec::with_capacity(designs.len());
    let mut bits = Vec::with_capacity(designs.len());
    for d in designs {
        let eta = d.natural_parameter(theta);
        let x = family.sample(&eta, d.offset(), rng)?;
        bits.push(Bit::censor(x, d.tau()));
        xs.push(x);
    }
    Ok((CensoredDataset::from_parts(&bits, designs)?, xs))
}

/// [`generate_and_censor`] from a seed.
pub fn generate_and_censor_seeded<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    designs: &[ObservationDesign],
    seed: u64,
) -> Result<CensoredDataset> {
    let mut rng = substream(seed, designs.len(), 0, DATA_STREAM);
    Ok(generate_and_censor(family, theta, designs, &mut rng)?.0)
}

/// Closed-form (or one-dimensional Newton) MLE from uncensored draws.
pub fn uncensored_mle(model: &Model, weights: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len() as f64;
    let w_of = |i: usize| weights[i % weights.len()];
    match *model {
        Model::GaussianCase1 { .. } | Model::GaussianCase3 => {
            let (mut sxw, mut sww) = (0.0, 0.0);
            for (i, x) in xs.iter().enumerate() {
                sxw += w_of(i) * x;
                sww += w_of(i) * w_of(i);
            }
            if sww == 0.0 {
                return Err(Error::NonIdentifiable("all weights are zero".into()));
            }
            let alpha = sxw / sww;
            if let Model::GaussianCase1 { .. } = model {
                return Ok(vec![alpha]);
            }
            let var = xs
                .iter()
                .enumerate()
                .map(|(i, x)| (x - w_of(i) * alpha).powi(2))
                .sum::<f64>()
                / n;
            if !(var > 0.0) {
                return Err(Error::NonIdentifiable("zero residual variance".into()));
            }
            Ok(vec![alpha / var, 1.0 / var])
        }
        Model::GaussianCase2 { alpha } => {
            let ss: f64 = xs.iter().enumerate().map(|(i, x)| (x - w_of(i) * alpha).powi(2)).sum();
            if !(ss > 0.0) {
                return Err(Error::NonIdentifiable("zero sum of squares".into()));
            }
            Ok(vec![n / ss])
        }
        Model::Poisson => {
            let sum_x: f64 = xs.iter().sum();
            let mean_v = (0..xs.len()).map(w_of).sum::<f64>() / n;
            if sum_x == 0.0 || mean_v == 0.0 {
                return Err(Error::NonIdentifiable("no counts to fit".into()));
            }
            // concave in theta: sum v x theta - exp(v theta)
            let mut theta = (sum_x / n).ln() / mean_v;
            for _ in 0..100 {
                let (mut g, mut h) = (0.0, 0.0);
                for (i, x) in xs.iter().enumerate() {
                    let v = w_of(i);
                    let l = (v * theta).exp();
                    g += v * (x - l);
                    h += v * v * l;
                }
                if !(h > 0.0) {
                    return Err(Error::Numerical("flat Poisson likelihood".into()));
                }
                let step = g / h;
                theta += step.clamp(-1.0, 1.0);
                if step.abs() <= 1e-13 * theta.abs().max(1.0) {
                    return Ok(vec![theta]);
                }
            }
            Err(Error::Numerical("Poisson Newton did not converge".into()))
        }
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub n: usize,
    pub trial: usize,
    /// Natural coordinates; absent when the fit failed outright.
    pub theta_hat: Option<Vec<f64>>,
    pub squared_error: Option<f64>,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Converged,
    Failed(String),
}

/// Runs trial `trial` at sample size `n`.
pub fn run_trial(config: &ExperimentConfig, n: usize, trial: usize) -> TrialOutcome {
    let failed = |msg: String| TrialOutcome {
        n,
        trial,
        theta_hat: None,
        squared_error: None,
        status: TrialStatus::Failed(msg),
    };
    let result = (|| -> Result<Vec<f64>> {
        let truth = config.truth_natural()?;
        let designs = config.draw_designs(n, trial)?;
        let family = config.model.family();
        let mut rng = substream(config.seed, n, trial, DATA_STREAM);
        let (data, xs) = generate_and_censor(&family, &truth, &designs, &mut rng)?;
        match config.estimator {
            EstimatorKind::Uncensored => uncensored_mle(&config.model, &config.design.weights, &xs),
            EstimatorKind::Censored => {
                let fit_seed = substream(config.seed, n, trial, FIT_STREAM).next_u64();
                let fc = FitConfig {
                    seed: fit_seed,
                    execution: ExecutionMode::Sequential,
                    ..config.fit.clone()
                };
                let r = fit(&family, &data, &fc)?;
                if r.status != FitStatus::Converged {
                    return Err(Error::Experiment(format!(
                        "fit ended with status {:?}: {}",
                        r.status,
                        r.message.unwrap_or_default()
                    )));
                }
                Ok(r.theta_hat.values().to_vec())
            }
        }
    })();
    match result {
        Ok(theta_hat) => {
            let err = (|| -> Result<f64> {
                let est = config.error_coordinates(&theta_hat)?;
                let truth = config.error_coordinates(&config.truth_natural()?)?;
                Ok(est.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum())
            })();
            match err {
                Ok(se) => TrialOutcome {
                    n,
                    trial,
                    theta_hat: Some(theta_hat),
                    squared_error: Some(se),
                    status: TrialStatus::Converged,
                },
                Err(e) => failed(e.to_string()),
            }
        }
        Err(e) => failed(e.to_string()),
    }
}

/// One row of an MSE table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub n: usize,
    pub mse: f64,
    pub mc_stderr: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTable {
    pub name: String,
    pub trials: usize,
    pub rows: Vec<MseRow>,
}

impl MseTable {
    /// CSV with header `n,mse,mc_stderr,failures`; floats in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mse,mc_stderr,failures\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e},{}\n", r.n, r.mse, r.mc_stderr, r.failures));
        }
        out
    }

    pub fn row(&self, n: usize) -> Option<&MseRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

fn check_failures(failures: usize, trials: usize, n: usize) -> Result<()> {
    if failures as f64 > MAX_FAILURE_FRACTION * trials as f64 {
        return Err(Error::Experiment(format!(
            "{failures} of {trials} trials failed at n = {n} (limit {:.0}%)",
            100.0 * MAX_FAILURE_FRACTION
        )));
    }
    Ok(())
}

/// All trials at one sample size, in trial order.
pub fn run_trials(config: &ExperimentConfig, n: usize) -> Vec<TrialOutcome> {
    exec::map(config.execution, config.trials, |t| run_trial(config, n, t))
}

/// Mean squared error per sample size over converged trials.
pub fn run_mse_experiment(config: &ExperimentConfig) -> Result<MseTable> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.sample_sizes.len());
    for &n in &config.sample_sizes {
        let outcomes = run_trials(config, n);
        let errors: Vec<f64> = outcomes.iter().filter_map(|o| o.squared_error).collect();
        let failures = outcomes.len() - errors.len();
        check_failures(failures, config.trials, n)?;
        let m = errors.len() as f64;
        let mse = errors.iter().sum::<f64>() / m;
        let mc_stderr = if errors.len() > 1 {
            let var = errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            f64::NAN
        };
        rows.push(MseRow {
            n,
            mse,
            mc_stderr,
            failures,
        });
    }
    Ok(MseTable {
        name: config.name.clone(),
        trials: config.trials,
        rows,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Empirical versus asymptotic covariance of `sqrt(n) (theta_hat - theta_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub k: usize,
    /// Empirical covariance, row-major, natural coordinates.
    pub empirical_covariance: Vec<f64>,
    /// `(J_n / n)^{-1}` averaged over the trial designs.
    pub reference_covariance: Vec<f64>,
    /// `||empirical - reference||_F / ||reference||_F`.
    pub relative_frobenius: f64,
    /// Per coordinate, after standardizing by the empirical mean and sd.
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    pub third_abs_moment: Vec<f64>,
    /// Mean of `sqrt(n) (theta_hat - theta_0)`.
    pub mean: Vec<f64>,
}

pub fn check_asymptotic_normality(config: &ExperimentConfig, n: usize, trials: usize) -> Result<NormalityReport> {
    if trials < 2 {
        return Err(Error::InvalidInput(
            "asymptotic normality needs at least two trials".into(),
        ));
    }
    let config = ExperimentConfig {
        trials,
        estimator: EstimatorKind::Censored,
        sample_sizes: vec![n],
        ..config.clone()
    };
    config.validate()?;
    let truth = config.truth_natural()?;
    let k = truth.len();
    let family = config.model.family();

    let per_trial = exec::map(config.execution, trials, |t| {
        let outcome = run_trial(&config, n, t);
        let info = config.draw_designs(n, t).and_then(|d| {
            fim_censored_with(&family, &truth, &d, false, ExecutionMode::Sequential).map(|f| f.normalized(n))
        });
        (outcome, info)
    });

    let mut samples = Vec::new();
    let mut info = vec![0.0; k * k];
    let mut failures = 0;
    for (outcome, j) in &per_trial {
        let j = j.as_ref().map_err(Clone::clone)?;
        for (a, b) in info.iter_mut().zip(j) {
            *a += b / trials as f64;
        }
        match &outcome.theta_hat {
            Some(th) => samples.push(
                th.iter()
                    .zip(&truth)
                    .map(|(a, b)| (n as f64).sqrt() * (a - b))
                    .collect::<Vec<f64>>(),
            ),
            None => failures += 1,
        }
    }
    check_failures(failures, trials, n)?;
    let reference = linalg::spd_inverse(&info, k)
        .map_err(|_| Error::NonIdentifiable("normalized information is singular".into()))?;

    let m = samples.len() as f64;
    let mean: Vec<f64> = (0..k).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / m).collect();
    let mut cov = vec![0.0; k * k];
    for s in &samples {
        for r in 0..k {
            for c in 0..k {
                cov[r * k + c] += (s[r] - mean[r]) * (s[c] - mean[c]) / (m - 1.0);
            }
        }
    }
    let diff: Vec<f64> = cov.iter().zip(&reference).map(|(a, b)| a - b).collect();
    let relative_frobenius = linalg::frobenius(&diff) / linalg::frobenius(&reference);

    let mut skewness = Vec::with_capacity(k);
    let mut excess_kurtosis = Vec::with_capacity(k);
    let mut third_abs_moment = Vec::with_capacity(k);
    for j in 0..k {
        let sd = cov[j * k + j].sqrt();
        let z: Vec<f64> = samples.iter().map(|s| (s[j] - mean[j]) / sd).collect();
        skewness.push(z.iter().map(|x| x.powi(3)).sum::<f64>() / m);
        excess_kurtosis.push(z.iter().map(|x| x.powi(4)).sum::<f64>() / m - 3.0);
        third_abs_moment.push(z.iter().map(|x| x.abs().powi(3)).sum::<f64>() / m);
    }

    Ok(NormalityReport {
        n,
        trials,
        failures,
        k,
        empirical_covariance: cov,
        reference_covariance: reference,
        relative_frobenius,
        skewness,
        excess_kurtosis,
        third_abs_moment,
        mean,
    })
}

/// One witnessed quantity and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionClause {
    pub value: f64,
    pub pass: bool,
}

/// Numerical check of the three consistency/normality conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsReport {
    pub n: usize,
    /// `max_i E||T(X_i)||^3`.
    pub third_moment: ConditionClause,
    /// `max_i ||V_i||_inf`.
    pub design_norm: ConditionClause,
    /// Smallest eigenvalue of `J_n / n`.
    pub information: ConditionClause,
    pub eigenvalues: Vec<f64>,
    pub determinant: f64,
    /// `||J_n / n - J_{n/2} / (n/2)||_F / ||J_n / n||_F`; informational.
    pub prefix_drift: f64,
    /// Largest third derivative of any single log-probability over a
    /// sample of observations; informational.
    pub max_third_derivative: f64,
}

impl ConditionsReport {
    pub fn pass(&self) -> bool {
        self.third_moment.pass && self.design_norm.pass && self.information.pass
    }
}

/// Observations sampled for the third-derivative diagnostic.
const THIRD_DERIVATIVE_SAMPLE: usize = 64;

pub fn check_theorem1_conditions<F: ExpFamily + ?Sized>(
    family: &F,
    theta0: &[f64],
    designs: &[ObservationDesign],
) -> Result<ConditionsReport> {
    let n = designs.len();
    if n == 0 {
        return Err(Error::InvalidInput("at least one design is required".into()));
    }
    let k = theta0.len();
    let mut third = 0.0f64;
    let mut vnorm = 0.0f64;
    for d in designs {
        let eta = d.natural_parameter(theta0);
        third = third.max(family.third_abs_moment(&eta, d.offset())?);
        vnorm = vnorm.max(d.infinity_norm());
    }

    let j = fim_censored_with(family, theta0, designs, true, ExecutionMode::default())?;
    let normalized = j.normalized(n);
    let eigenvalues = linalg::eigenvalues(&normalized, k);
    let determinant = linalg::determinant(&normalized, k);

    let half = n / 2;
    let prefix_drift = if half >= 1 {
        let terms = j.per_observation.as_ref().expect("terms were requested");
        let mut prefix = vec![0.0; k * k];
        for t in &terms[..half] {
            for (a, b) in prefix.iter_mut().zip(t) {
                *a += b / half as f64;
            }
        }
        let diff: Vec<f64> = normalized.iter().zip(&prefix).map(|(a, b)| a - b).collect();
        let scale = linalg::frobenius(&normalized);
        if scale > 0.0 {
            linalg::frobenius(&diff) / scale
        } else {
            f64::INFINITY
        }
    } else {
        f64::NAN
    };

    let stride = (n / THIRD_DERIVATIVE_SAMPLE).max(1);
    let mut max_third = 0.0f64;
    for d in designs.iter().step_by(stride) {
        for bit in Bit::BOTH {
            if let Ok(t) = observation_third_derivative(family, theta0, d, bit) {
                max_third = max_third.max(t.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            }
        }
    }

    let min_eig = eigenvalues[0];
    Ok(ConditionsReport {
        n,
        third_moment: ConditionClause {
            value: third,
            pass: third.is_finite(),
        },
        design_norm: ConditionClause {
            value: vnorm,
            pass: vnorm.is_finite(),
        },
        information: ConditionClause {
            value: min_eig,
            pass: min_eig > linalg::PSD_TOLERANCE && determinant.is_finite(),
        },
        eigenvalues,
        determinant,
        prefix_drift,
        max_third_derivative: max_third,
    })
}
