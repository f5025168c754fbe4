//! Acceptance run: one PASS/FAIL line per criterion, details indented
//! below it. Exits non-zero when a criterion fails that is not listed in
//! `KNOWN_DEVIATIONS`; those still print FAIL.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use censored_glm::cli::config::SimulationConfig;
use censored_glm::error::Error;
use censored_glm::estimator::{fit, FitConfig, FitStatus};
use censored_glm::exec::ExecutionMode;
use censored_glm::expfam::{
    censored_prob, hessian, log_likelihood, observation_hessian, observation_score, score, Bit, CensoredDataset,
    ExpFamily, ObservationDesign, ParameterVector,
};
use censored_glm::fisher::{expected_negative_hessian, fim_censored, fim_uncensored};
use censored_glm::montecarlo::{
    check_asymptotic_normality, generate_and_censor, loglog_slope, run_mse_experiment, DesignRule, ErrorMetric,
    EstimatorKind, ExperimentConfig, MseTable, ThresholdRule, GAUSSIAN_THIRD_ABS_MOMENT,
};
use censored_glm::zoo::{GaussianCase1, Model, PoissonModel};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Criteria expected to fail, each analysed in the README. The dotted
/// curve's reference value is below the asymptotic MSE the model itself
/// predicts for that design; the check below still requires the measured
/// value to match that prediction.
const KNOWN_DEVIATIONS: &[u32] = &[6];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("[{}] {line}", if ok { "ok" } else { "!!" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }

    fn runtime(&mut self, elapsed: Duration, limit: Duration) {
        self.check(
            elapsed <= limit,
            format!(
                "runtime {:.2}s (limit {:.0}s)",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            ),
        );
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn param(family: &impl ExpFamily, theta: &[f64]) -> ParameterVector {
    ParameterVector::new(theta.to_vec(), family.parameter_domain(theta.len())).unwrap()
}

// ------------------------------------------------------------------ 1

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_censored-glm"))
        .args(["fim", "--json", "--config"])
        .arg(manifest_dir().join("configs/two_obs.cfg"))
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    o.check(
        out.status.code() == Some(0),
        format!("exit code {:?}", out.status.code()),
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    let det = report["det_censored"].as_f64().unwrap_or(f64::NAN);
    o.check(
        (det - 0.1294).abs() <= 5e-4,
        format!("det J_2 = {det:.6} (expected 0.1294 +- 5e-4)"),
    );
    o.runtime(elapsed, Duration::from_secs(1));
    o
}

// ------------------------------------------------------------------ 2

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let target = 2.0 / std::f64::consts::PI;
    let mut worst_ratio = 0.0f64;
    let mut worst_argmax = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..20);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let alpha: f64 = rng.random_range(-3.0..3.0);
        let sigma: f64 = rng.random_range(0.2..4.0);
        let m = GaussianCase1::new(weights.clone(), sigma).unwrap();
        let ratio = m.fim(alpha, &m.optimal_thresholds(alpha)).unwrap() / m.uncensored_fim();
        worst_ratio = worst_ratio.max((ratio - target).abs() / target);

        // one observation at a time: scan tau around the optimum
        let w = weights[0];
        let single = GaussianCase1::new(vec![w], sigma).unwrap();
        let center = w * alpha;
        let (mut best_tau, mut best) = (f64::NAN, f64::NEG_INFINITY);
        for step in -3000..=3000 {
            let tau = center + step as f64 * 1e-3;
            let j = single.fim(alpha, &[tau]).unwrap();
            if j > best {
                best = j;
                best_tau = tau;
            }
        }
        worst_argmax = worst_argmax.max((best_tau - center).abs());
    }
    o.check(
        worst_ratio <= 1e-12,
        format!("max |J/I - 2/pi| / (2/pi) = {worst_ratio:.2e} over 50 designs"),
    );
    o.check(
        worst_argmax <= 1e-3 + 1e-12,
        format!("max |argmax tau - w alpha| = {worst_argmax:.1e} (grid 1e-3, range +-3)"),
    );
    o.runtime(start.elapsed(), Duration::from_secs(1));
    o
}

// ------------------------------------------------------------------ 3 and 4

struct FimAgreement {
    closed: f64,
    assembled: f64,
    hessian: f64,
    finite_difference: f64,
    dpi_min: f64,
    uncensored: f64,
    configs: usize,
    elapsed: Duration,
}

fn fim_agreement() -> FimAgreement {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut r = FimAgreement {
        closed: 0.0,
        assembled: 0.0,
        hessian: 0.0,
        finite_difference: 0.0,
        dpi_min: f64::INFINITY,
        uncensored: 0.0,
        configs: 0,
        elapsed: Duration::ZERO,
    };
    for i in 0..1000 {
        let model = random_model(&mut rng, i);
        let theta = random_theta(&mut rng, &model);
        let k = theta.len();
        let n = rng.random_range(1..=6);
        let (weights, taus): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| random_observation(&mut rng, &model, &theta, 6.0))
            .unzip();
        let family = model.family();
        let designs = model.designs(&weights, &taus).unwrap();

        let (oracle_j, oracle_i) = reference_fim(&model, &theta, &weights, &taus);
        let closed = model.closed_form_fim(&theta, &weights, &taus).unwrap();
        let assembled = fim_censored(&family, &theta, &designs).unwrap();
        let neg_h = expected_negative_hessian(&family, &theta, &designs).unwrap();
        let uncensored = fim_uncensored(&family, &theta, &designs).unwrap();

        // -E[d score / d theta] with a central difference of the score
        let mut fd = vec![0.0; k * k];
        for (d, (&w, &tau)) in designs.iter().zip(weights.iter().zip(&taus)) {
            let reference = reference(&model, &theta, w, tau);
            for (b, bit) in Bit::BOTH.into_iter().enumerate() {
                for c in 0..k {
                    let h = 1e-4 * theta[c].abs().max(1.0);
                    let (mut up, mut down) = (theta.clone(), theta.clone());
                    up[c] += h;
                    down[c] -= h;
                    let su = observation_score(&family, &up, d, bit).unwrap();
                    let sd = observation_score(&family, &down, d, bit).unwrap();
                    for row in 0..k {
                        fd[row * k + c] -= reference.prob[b] * (su[row] - sd[row]) / (2.0 * h);
                    }
                }
            }
        }

        r.closed = r.closed.max(rel_err(&oracle_j, &closed, k));
        r.assembled = r.assembled.max(rel_err(&oracle_j, &assembled.matrix, k));
        r.hessian = r.hessian.max(rel_err(&oracle_j, &neg_h.matrix, k));
        r.finite_difference = r.finite_difference.max(rel_err(&oracle_j, &fd, k));
        r.uncensored = r.uncensored.max(rel_err(&oracle_i, &uncensored.matrix, k));
        let diff: Vec<f64> = uncensored
            .matrix
            .iter()
            .zip(&assembled.matrix)
            .map(|(a, b)| a - b)
            .collect();
        r.dpi_min = r.dpi_min.min(min_eig(&diff, k));
        r.configs += 1;
    }
    r.elapsed = start.elapsed();
    r
}

fn criterion_3(a: &FimAgreement) -> Outcome {
    let mut o = Outcome::new();
    o.note(format!(
        "{} randomized configs over all four models, |z| <= 6",
        a.configs
    ));
    o.check(
        a.closed <= 1e-10,
        format!("closed form vs enumeration oracle: {:.2e}", a.closed),
    );
    o.check(
        a.assembled <= 1e-10,
        format!("covariance assembly vs oracle: {:.2e}", a.assembled),
    );
    o.check(a.hessian <= 1e-10, format!("-E[hessian] vs oracle: {:.2e}", a.hessian));
    o.check(
        a.finite_difference <= 1e-4,
        format!(
            "-E[finite-difference Jacobian of score] vs oracle: {:.2e}",
            a.finite_difference
        ),
    );
    o.check(
        a.uncensored <= 1e-10,
        format!("uncensored information vs oracle: {:.2e}", a.uncensored),
    );
    o.runtime(a.elapsed, Duration::from_secs(30));
    o
}

fn criterion_4(a: &FimAgreement) -> Outcome {
    let mut o = Outcome::new();
    o.check(
        a.dpi_min >= -1e-10,
        format!(
            "min eigenvalue of I_n - J_n over {} configs: {:.3e}",
            a.configs, a.dpi_min
        ),
    );
    o
}

// ------------------------------------------------------------------ 5

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut zero_mean, mut grad, mut hess) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..200 {
        let model = random_model(&mut rng, i);
        let theta = random_theta(&mut rng, &model);
        let k = theta.len();
        let n = rng.random_range(1..=8);
        let (weights, taus): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| random_observation(&mut rng, &model, &theta, 3.0))
            .unzip();
        let family = model.family();
        let designs = model.designs(&weights, &taus).unwrap();
        let p = param(&family, &theta);

        let mut bits = Vec::with_capacity(n);
        let (mut score_scale, mut hess_scale) = (0.0f64, 0.0f64);
        for d in &designs {
            let (mut mean, mut size) = (vec![0.0; k], 0.0);
            for bit in Bit::BOTH {
                let pb = censored_prob(&family, &p, d, bit).unwrap();
                let s = observation_score(&family, &theta, d, bit).unwrap();
                for j in 0..k {
                    mean[j] += pb * s[j];
                    size += pb * s[j].abs();
                }
            }
            zero_mean = zero_mean.max(mean.iter().fold(0.0f64, |m, x| m.max(x.abs())) / size);
            let bit = if rng.random_bool(0.5) { Bit::Below } else { Bit::Above };
            let s = observation_score(&family, &theta, d, bit).unwrap();
            let h = observation_hessian(&family, &theta, d, bit).unwrap();
            score_scale += s.iter().fold(0.0f64, |m, x| m.max(x.abs())) / n as f64;
            hess_scale += h.iter().fold(0.0f64, |m, x| m.max(x.abs())) / n as f64;
            bits.push(bit);
        }
        let data = CensoredDataset::from_parts(&bits, &designs).unwrap();
        let g = score(&family, &p, &data).unwrap();
        let hm = hessian(&family, &p, &data).unwrap();

        let mut g_fd = vec![0.0; k];
        let mut h_fd = vec![0.0; k * k];
        for c in 0..k {
            let step = |h: f64| {
                let (mut up, mut down) = (theta.clone(), theta.clone());
                up[c] += h;
                down[c] -= h;
                (param(&family, &up), param(&family, &down))
            };
            let h = 1e-6 * theta[c].abs().max(1.0);
            let (up, down) = step(h);
            g_fd[c] = (log_likelihood(&family, &up, &data).unwrap() - log_likelihood(&family, &down, &data).unwrap())
                / (2.0 * h);
            let h = 1e-4 * theta[c].abs().max(1.0);
            let (up, down) = step(h);
            let (su, sd) = (
                score(&family, &up, &data).unwrap(),
                score(&family, &down, &data).unwrap(),
            );
            for r in 0..k {
                h_fd[r * k + c] = (su[r] - sd[r]) / (2.0 * h);
            }
        }
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gdiff: Vec<f64> = g.iter().zip(&g_fd).map(|(a, b)| a - b).collect();
        let hdiff: Vec<f64> = hm.iter().zip(&h_fd).map(|(a, b)| a - b).collect();
        grad = grad.max(max_abs(&gdiff) / max_abs(&g).max(score_scale));
        hess = hess.max(max_abs(&hdiff) / max_abs(&hm).max(hess_scale));
    }
    o.note("200 randomized instances; relative errors are scaled by max(|exact|, mean per-observation size)".into());
    o.check(
        zero_mean <= 1e-12,
        format!("|E[score]| / E|score| per observation: {zero_mean:.2e}"),
    );
    o.check(grad <= 1e-5, format!("score vs finite-difference gradient: {grad:.2e}"));
    o.check(
        hess <= 1e-4,
        format!("hessian vs finite-difference Jacobian: {hess:.2e}"),
    );
    o.runtime(start.elapsed(), Duration::from_secs(30));
    o
}

// ------------------------------------------------------------------ 6

/// Asymptotic MSE in `(alpha, sigma)` for Case 3 at natural `theta`
/// with thresholds drawn from `taus` (equiprobable), or uncensored.
fn predicted_mse(theta: &[f64], taus: Option<&[f64]>, n: usize) -> f64 {
    let model = Model::GaussianCase3;
    let family = model.family();
    let info = match taus {
        Some(t) => {
            let designs = model.designs(&vec![1.0; t.len()], t).unwrap();
            fim_censored(&family, theta, &designs)
                .unwrap()
                .matrix
                .iter()
                .map(|x| x / t.len() as f64)
                .collect()
        }
        None => {
            fim_uncensored(&family, theta, &[model.design(1.0, 0.0).unwrap()])
                .unwrap()
                .matrix
        }
    };
    let det = info[0] * info[3] - info[1] * info[2];
    let inv = [info[3] / det, -info[1] / det, -info[2] / det, info[0] / det];
    // Jacobian of (alpha, sigma) = (t1 / t2, t2^-1/2)
    let g = [
        1.0 / theta[1],
        -theta[0] / (theta[1] * theta[1]),
        0.0,
        -0.5 * theta[1].powf(-1.5),
    ];
    let mut trace = 0.0;
    for r in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                trace += g[r * 2 + a] * inv[a * 2 + b] * g[r * 2 + b];
            }
        }
    }
    trace / n as f64
}

fn criterion_6(tables: &[MseTable], elapsed: Duration) -> (Outcome, bool) {
    let mut o = Outcome::new();
    let get = |name: &str| {
        tables
            .iter()
            .find(|t| t.name == name)
            .expect("mse_curves.cfg defines the curve")
    };
    let (unc, dash, dot) = (get("uncensored"), get("dashed"), get("dotted"));
    let theta = [2.0, 1.0];
    let last = |t: &MseTable| t.rows.last().unwrap().clone();
    o.note(format!("{} trials per point", unc.trials));
    for (t, taus) in [
        (unc, None),
        (dash, Some(&[0.42, 2.0][..])),
        (dot, Some(&[1.2, 1.9][..])),
    ] {
        let row = last(t);
        o.note(format!(
            "{:<10} n = {}: mse = {:.4e} +- {:.1e}, failures {}, asymptotic prediction {:.4e}",
            t.name,
            row.n,
            row.mse,
            row.mc_stderr,
            row.failures,
            predicted_mse(&theta, taus, row.n)
        ));
    }
    let within = |v: f64, target: f64, tol: f64| (v - target).abs() <= tol * target;
    let (u, d, t) = (last(unc), last(dash), last(dot));
    o.check(
        within(u.mse, 1.54e-4, 0.10),
        format!("uncensored {:.4e} vs 1.54e-4 +- 10%", u.mse),
    );
    o.check(
        within(d.mse, 7.57e-4, 0.15),
        format!("dashed {:.4e} vs 7.57e-4 +- 15%", d.mse),
    );
    let dotted_ok = within(t.mse, 9.80e-4, 0.15);
    o.check(dotted_ok, format!("dotted {:.4e} vs 9.80e-4 +- 15%", t.mse));
    let mut ordered = true;
    for ((a, b), c) in unc.rows.iter().zip(&dash.rows).zip(&dot.rows) {
        let ab = b.mse - a.mse + 3.0 * (a.mc_stderr.powi(2) + b.mc_stderr.powi(2)).sqrt();
        let bc = c.mse - b.mse + 3.0 * (b.mc_stderr.powi(2) + c.mc_stderr.powi(2)).sqrt();
        ordered &= ab > 0.0 && bc > 0.0;
    }
    o.check(
        ordered,
        "uncensored < dashed < dotted at every n (3 sigma one-sided)".into(),
    );
    o.runtime(elapsed, Duration::from_secs(600));

    // the deviation is only "known" if the rest holds and the dotted curve
    // matches its own asymptotic prediction
    let predicted = predicted_mse(&theta, Some(&[1.2, 1.9]), t.n);
    let explained = within(t.mse, predicted, 0.15)
        && o.details.iter().filter(|l| l.starts_with("[!!]")).count() == usize::from(!dotted_ok);
    if !dotted_ok {
        o.note(format!(
            "dotted vs its asymptotic prediction {predicted:.4e}: {:+.1}%",
            100.0 * (t.mse / predicted - 1.0)
        ));
    }
    (o, explained)
}

// ------------------------------------------------------------------ 7

fn criterion_7(dashed: &MseTable) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let two_obs = ExperimentConfig {
        name: "normality".into(),
        model: Model::GaussianCase3,
        truth: vec![1.0, 1.0],
        design: DesignRule {
            weights: vec![1.0],
            thresholds: ThresholdRule::Fixed {
                values: vec![-1.0, 2.0],
            },
        },
        sample_sizes: vec![10_000],
        trials: 500,
        seed: 7,
        estimator: EstimatorKind::Censored,
        metric: ErrorMetric::Natural,
        fit: FitConfig::default(),
        execution: ExecutionMode::default(),
    };
    let r = check_asymptotic_normality(&two_obs, 10_000, 500).unwrap();
    o.check(
        r.relative_frobenius <= 0.15,
        format!(
            "Case 3, thresholds (-1, 2), n = 1e4, 500 trials: relative Frobenius distance {:.3}",
            r.relative_frobenius
        ),
    );
    o.note(format!(
        "empirical {:?}",
        r.empirical_covariance
            .iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
    ));
    o.note(format!(
        "reference {:?}",
        r.reference_covariance
            .iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
    ));
    let third_ok = r
        .third_abs_moment
        .iter()
        .all(|m| (m - GAUSSIAN_THIRD_ABS_MOMENT).abs() <= 1.0);
    o.check(
        third_ok,
        format!(
            "standardized E|Z|^3 per coordinate {:?} within 1 of {GAUSSIAN_THIRD_ABS_MOMENT:.4}",
            r.third_abs_moment.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()
        ),
    );

    let slope_of = |t: &MseTable| {
        let n: Vec<f64> = t.rows.iter().map(|r| r.n as f64).collect();
        let m: Vec<f64> = t.rows.iter().map(|r| r.mse).collect();
        loglog_slope(&n, &m)
    };
    let s = slope_of(dashed);
    o.check(
        (s + 1.0).abs() <= 0.15,
        format!("Case 3 (dashed curve) log-log MSE slope {s:.3}"),
    );

    let poisson = ExperimentConfig {
        name: "poisson-slope".into(),
        model: Model::Poisson,
        truth: vec![3.0],
        design: DesignRule {
            weights: vec![1.0, 0.5, 1.5],
            thresholds: ThresholdRule::Fixed {
                values: vec![1.0, 2.0, 3.0, 4.0],
            },
        },
        sample_sizes: dashed.rows.iter().map(|r| r.n).collect(),
        trials: 1000,
        seed: 77,
        estimator: EstimatorKind::Censored,
        metric: ErrorMetric::Moment,
        fit: FitConfig::default(),
        execution: ExecutionMode::default(),
    };
    let t = run_mse_experiment(&poisson).unwrap();
    let s = slope_of(&t);
    o.check(
        (s + 1.0).abs() <= 0.15,
        format!("Poisson (lambda = 3) log-log MSE slope {s:.3}"),
    );
    o.note(format!("runtime {:.1}s", start.elapsed().as_secs_f64()));
    o
}

// ------------------------------------------------------------------ 8

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut fim_err, mut prob_err) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let v: f64 = rng.random_range(-2.0..2.0);
        let theta: f64 = rng.random_range(-1.5..1.5);
        let lambda = (v * theta).exp();
        let tau: f64 = rng.random_range(0.0..lambda + 4.0 * lambda.sqrt() + 2.0);
        let model = Model::Poisson;
        let closed = PoissonModel::new(vec![v]).unwrap().fim(theta, &[tau]).unwrap();
        let (oracle, _) = reference_fim(&model, &[theta], &[v], &[tau]);
        fim_err = fim_err.max(rel_err(&oracle, &[closed], 1));

        let family = model.family();
        let d = model.design(v, tau).unwrap();
        let p = param(&family, &[theta]);
        for (sign, bit) in SIGNS.into_iter().zip(Bit::BOTH) {
            let exact = poisson_bit_prob(lambda, tau, sign);
            let lib = censored_prob(&family, &p, &d, bit).unwrap();
            prob_err = prob_err.max((lib - exact).abs() / exact);
        }
    }
    o.check(
        fim_err <= 1e-10,
        format!("closed form vs pmf enumeration, 200 configs: {fim_err:.2e}"),
    );
    o.check(
        prob_err <= 1e-10,
        format!("P(B = b) vs regularized incomplete gamma: {prob_err:.2e}"),
    );
    let spot = PoissonModel::new(vec![1.0]).unwrap().fim(0.0, &[0.0]).unwrap();
    let exact = 1.0 / (std::f64::consts::E - 1.0);
    o.check(
        (spot - exact).abs() <= 1e-12,
        format!("v = 1, theta = 0, tau = 0: {spot:.15} vs 1/(e - 1) = {exact:.15}"),
    );
    o
}

// ------------------------------------------------------------------ 9

/// Censored log-likelihood from statrs distribution functions.
fn oracle_loglik(model: &Model, theta: f64, weights: &[f64], taus: &[f64], bits: &[Bit]) -> f64 {
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut ll = 0.0;
    for ((&w, &tau), &bit) in weights.iter().zip(taus).zip(bits) {
        let below = bit == Bit::Below;
        let p = match *model {
            Model::GaussianCase1 { sigma } => {
                let z = (tau - w * theta) / sigma;
                if below {
                    std.cdf(z)
                } else {
                    std.sf(z)
                }
            }
            Model::GaussianCase2 { alpha } => {
                if theta <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (tau - w * alpha) * theta.sqrt();
                if below {
                    std.cdf(z)
                } else {
                    std.sf(z)
                }
            }
            Model::Poisson => poisson_bit_prob((w * theta).exp(), tau, if below { 1 } else { -1 }),
            Model::GaussianCase3 => unreachable!("k = 1 only"),
        };
        ll += p.ln();
    }
    ll
}

/// Argmax over `[lo, hi]`: a 1e-2 grid, then 1e-4 and 1e-6 refinements
/// around the best point.
fn grid_search(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let scan = |a: f64, b: f64, h: f64| {
        let steps = ((b - a) / h).round() as i64;
        (0..=steps)
            .map(|s| (a + s as f64 * h).min(hi).max(lo))
            .map(|x| (x, f(x)))
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |best, (x, v)| if v > best.1 { (x, v) } else { best },
            )
    };
    let (mut x, mut v) = scan(lo, hi, 1e-2);
    for h in [1e-4, 1e-6] {
        (x, v) = scan(x - 200.0 * h, x + 200.0 * h, h);
    }
    (x, v)
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst, mut interior, mut boundary, mut mismatched) = (0.0f64, 0, 0, Vec::new());
    let mut deterministic = true;
    for i in 0..100 {
        let model = match i % 3 {
            0 => Model::GaussianCase1 {
                sigma: rng.random_range(0.5..2.0),
            },
            1 => Model::GaussianCase2 {
                alpha: rng.random_range(-1.0..1.0),
            },
            _ => Model::Poisson,
        };
        let (truth, lo, hi) = match model {
            Model::GaussianCase1 { .. } => (rng.random_range(-2.0..2.0), -15.0, 15.0),
            Model::GaussianCase2 { .. } => (rng.random_range(0.3..4.0), 0.005, 60.0),
            _ => (rng.random_range(-0.5..1.5), -6.0, 6.0),
        };
        let n = rng.random_range(5..=50);
        let (weights, taus): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| {
                let (w, tau) = random_observation(&mut rng, &model, &[truth], 1.5);
                match model {
                    Model::Poisson => (w.clamp(0.5, 1.5), tau),
                    _ => (w, tau),
                }
            })
            .unzip();
        let family = model.family();
        let designs: Vec<ObservationDesign> = model.designs(&weights, &taus).unwrap();
        let (data, _) = generate_and_censor(&family, &[truth], &designs, &mut rng).unwrap();
        let bits: Vec<Bit> = data.observations().iter().map(|o| o.bit).collect();

        let (grid_x, _) = grid_search(|t| oracle_loglik(&model, t, &weights, &taus, &bits), lo, hi);
        let at_edge = grid_x - lo < 0.05 || hi - grid_x < 0.05;

        let config = FitConfig {
            seed: i as u64,
            ..FitConfig::default()
        };
        let result = fit(&family, &data, &config);
        let rerun = fit(
            &family,
            &data,
            &FitConfig {
                execution: ExecutionMode::Sequential,
                ..config.clone()
            },
        );
        deterministic &= match (&result, &rerun) {
            (Ok(a), Ok(b)) => serde_json::to_string(a).unwrap() == serde_json::to_string(b).unwrap(),
            (Err(a), Err(b)) => a.to_string() == b.to_string(),
            _ => false,
        };
        match result {
            Ok(r) if r.status == FitStatus::Converged => {
                interior += 1;
                let gap = (r.theta_hat.values()[0] - grid_x).abs();
                worst = worst.max(gap);
                if gap > 2e-6 || at_edge {
                    mismatched.push(format!(
                        "instance {i}: fit {} vs grid {grid_x}",
                        r.theta_hat.values()[0]
                    ));
                }
            }
            other => {
                boundary += 1;
                if !at_edge {
                    mismatched.push(format!("instance {i}: {other:?} but grid maximum at {grid_x}"));
                }
            }
        }
    }
    o.check(
        mismatched.is_empty() && worst <= 2e-6,
        format!(
            "{interior} interior fits within {worst:.1e} of the 1e-6 grid argmax; {boundary} unbounded, grid agrees"
        ),
    );
    for m in mismatched.iter().take(5) {
        o.note(m.clone());
    }
    o.check(
        deterministic,
        "parallel and sequential reruns serialize bit-identically".into(),
    );

    let model = Model::GaussianCase1 { sigma: 1.0 };
    let designs = model.designs(&[1.0; 6], &[-1.0, 0.0, 1.0, 0.5, 2.0, -0.5]).unwrap();
    let mut one_sided = true;
    for bit in Bit::BOTH {
        let data = CensoredDataset::from_parts(&[bit; 6], &designs).unwrap();
        one_sided &= matches!(
            fit(&model.family(), &data, &FitConfig::default()),
            Err(Error::NonIdentifiable(_))
        );
    }
    o.check(one_sided, "all +1 and all -1 data return NonIdentifiable".into());
    o
}

// ------------------------------------------------------------------ driver

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let titles = [
        "two-observation determinant via `fim`",
        "censoring penalty 2/pi and optimal threshold",
        "three-way FIM agreement",
        "data-processing inequality",
        "score calculus",
        "MSE curves for three designs",
        "asymptotic normality and consistency",
        "Poisson closed form",
        "MLE vs grid-search oracle",
    ];
    let mut results: Vec<(u32, Outcome, bool)> = Vec::new();
    let mut report = |id: u32, o: Outcome, explained: bool| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let tag = if !o.pass && explained { " (known deviation)" } else { "" };
        println!("criterion {id}: {verdict}{tag} - {}", titles[id as usize - 1]);
        for line in &o.details {
            println!("    {line}");
        }
        results.push((id, o, explained));
    };

    report(1, criterion_1(), false);
    report(2, criterion_2(), false);
    let agreement = fim_agreement();
    report(3, criterion_3(&agreement), false);
    report(4, criterion_4(&agreement), false);
    report(5, criterion_5(), false);

    let start = Instant::now();
    let text = std::fs::read_to_string(manifest_dir().join("configs/mse_curves.cfg")).unwrap();
    let cfg: SimulationConfig = toml::from_str(&text).unwrap();
    let tables: Vec<MseTable> = cfg
        .experiments(None)
        .unwrap()
        .iter()
        .map(|e| run_mse_experiment(e).unwrap())
        .collect();
    let (o6, explained) = criterion_6(&tables, start.elapsed());
    report(6, o6, explained && KNOWN_DEVIATIONS.contains(&6));
    let dashed = tables.iter().find(|t| t.name == "dashed").unwrap();
    report(7, criterion_7(dashed), false);
    report(8, criterion_8(), false);
    report(9, criterion_9(), false);

    let passed = results.iter().filter(|r| r.1.pass).count();
    let unexpected: Vec<u32> = results.iter().filter(|r| !r.1.pass && !r.2).map(|r| r.0).collect();
    let known: Vec<u32> = results.iter().filter(|r| !r.1.pass && r.2).map(|r| r.0).collect();
    println!(
        "acceptance: {passed}/{} pass; known deviations {known:?}; unexpected failures {unexpected:?}",
        results.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
