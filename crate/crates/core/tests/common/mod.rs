//! Reference computations that share no code with the library: truncated
//! normal moments from statrs, Poisson moments by summing the pmf, and the
//! censored information assembled from those.

#![allow(dead_code)]

use censored_glm::zoo::Model;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// Bit order used throughout: index 0 is `+1` (below), index 1 is `-1`.
pub const SIGNS: [i64; 2] = [1, -1];

/// Per-observation reference: probabilities, score of each bit, and the
/// uncensored information term. Matrices are row-major `k x k`.
#[derive(Debug, Clone)]
pub struct Reference {
    pub prob: [f64; 2],
    pub score: [Vec<f64>; 2],
    pub uncensored: Vec<f64>,
}

impl Reference {
    pub fn information(&self) -> Vec<f64> {
        let k = self.score[0].len();
        let mut out = vec![0.0; k * k];
        for b in 0..2 {
            for r in 0..k {
                for c in 0..k {
                    out[r * k + c] += self.prob[b] * self.score[b][r] * self.score[b][c];
                }
            }
        }
        out
    }
}

/// `(P, E[X | b], E[X^2 | b])` for `N(mu, s^2)` censored at `tau`, both bits.
pub fn truncated_normal(mu: f64, s: f64, tau: f64) -> [(f64, f64, f64); 2] {
    let std = Normal::new(0.0, 1.0).unwrap();
    let z = (tau - mu) / s;
    let (lo, hi, pdf) = (std.cdf(z), std.sf(z), std.pdf(z));
    let base = mu * mu + s * s;
    [
        (lo, mu - s * pdf / lo, base - s * (mu + tau) * pdf / lo),
        (hi, mu + s * pdf / hi, base + s * (mu + tau) * pdf / hi),
    ]
}

fn ln_pmf(x: u64, lambda: f64) -> f64 {
    x as f64 * lambda.ln() - lambda - ln_gamma(x as f64 + 1.0)
}

/// `(P, E[X | b])` for `Poisson(lambda)` censored at `tau`, by summing the
/// pmf on each side of the cut.
pub fn truncated_poisson(lambda: f64, tau: f64) -> [(f64, f64); 2] {
    let m = tau.floor() as u64;
    let (mut p_lo, mut s_lo) = (0.0, 0.0);
    for x in 0..=m {
        let f = ln_pmf(x, lambda).exp();
        p_lo += f;
        s_lo += f * x as f64;
    }
    let (mut p_hi, mut s_hi) = (0.0, 0.0);
    let mut x = m + 1;
    loop {
        let f = ln_pmf(x, lambda).exp();
        p_hi += f;
        s_hi += f * x as f64;
        if x as f64 > lambda && f < 1e-300_f64.max(p_hi * 1e-18) {
            break;
        }
        x += 1;
    }
    [(p_lo, s_lo / p_lo), (p_hi, s_hi / p_hi)]
}

/// `P(B = b)` via regularized incomplete gamma functions.
pub fn poisson_bit_prob(lambda: f64, tau: f64, sign: i64) -> f64 {
    let a = tau.floor() + 1.0;
    if sign == 1 {
        gamma_ur(a, lambda)
    } else {
        gamma_lr(a, lambda)
    }
}

/// Reference quantities of one observation with weight `w` and threshold
/// `tau` under `model` at natural `theta`.
pub fn reference(model: &Model, theta: &[f64], w: f64, tau: f64) -> Reference {
    match *model {
        Model::GaussianCase1 { sigma } => {
            let v = w / (sigma * sigma);
            let mu = w * theta[0];
            let t = truncated_normal(mu, sigma, tau);
            Reference {
                prob: [t[0].0, t[1].0],
                score: [vec![v * (t[0].1 - mu)], vec![v * (t[1].1 - mu)]],
                uncensored: vec![v * v * sigma * sigma],
            }
        }
        Model::GaussianCase2 { alpha } => {
            // T = (x - m)^2, E[T] = s^2, V = -1/2
            let m = w * alpha;
            let s = theta[0].sqrt().recip();
            let t = truncated_normal(0.0, s, tau - m);
            Reference {
                prob: [t[0].0, t[1].0],
                score: [vec![-0.5 * (t[0].2 - s * s)], vec![-0.5 * (t[1].2 - s * s)]],
                uncensored: vec![0.25 * 2.0 * s.powi(4)],
            }
        }
        Model::GaussianCase3 => {
            let s2 = 1.0 / theta[1];
            let (alpha, s) = (theta[0] * s2, s2.sqrt());
            let mu = w * alpha;
            let t = truncated_normal(mu, s, tau);
            let (m1, m2) = (mu, mu * mu + s2);
            let score = |b: usize| vec![w * (t[b].1 - m1), -0.5 * (t[b].2 - m2)];
            // Cov(X, X^2) = 2 mu s^2, Var(X^2) = 2 s^4 + 4 mu^2 s^2
            let (cxx, cxy, cyy) = (s2, 2.0 * mu * s2, 2.0 * s2 * s2 + 4.0 * mu * mu * s2);
            Reference {
                prob: [t[0].0, t[1].0],
                score: [score(0), score(1)],
                uncensored: vec![w * w * cxx, -0.5 * w * cxy, -0.5 * w * cxy, 0.25 * cyy],
            }
        }
        Model::Poisson => {
            let lambda = (w * theta[0]).exp();
            let t = truncated_poisson(lambda, tau);
            Reference {
                prob: [t[0].0, t[1].0],
                score: [vec![w * (t[0].1 - lambda)], vec![w * (t[1].1 - lambda)]],
                uncensored: vec![w * w * lambda],
            }
        }
    }
}

pub fn add_into(acc: &mut [f64], term: &[f64]) {
    for (a, t) in acc.iter_mut().zip(term) {
        *a += t;
    }
}

/// Reference censored and uncensored information over a design.
pub fn reference_fim(model: &Model, theta: &[f64], weights: &[f64], taus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = theta.len();
    let (mut j, mut i) = (vec![0.0; k * k], vec![0.0; k * k]);
    for (&w, &tau) in weights.iter().zip(taus) {
        let r = reference(model, theta, w, tau);
        add_into(&mut j, &r.information());
        add_into(&mut i, &r.uncensored);
    }
    (j, i)
}

/// Entrywise `|a - b| / max(|a|, |b|, sqrt(a_rr a_cc))`, worst entry.
pub fn rel_err(a: &[f64], b: &[f64], k: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..k {
        for c in 0..k {
            let (x, y) = (a[r * k + c], b[r * k + c]);
            let diag = (a[r * k + r] * a[c * k + c]).abs().sqrt();
            let scale = x.abs().max(y.abs()).max(diag);
            if scale > 0.0 {
                worst = worst.max((x - y).abs() / scale);
            }
        }
    }
    worst
}

/// Smallest eigenvalue of a symmetric 1x1 or 2x2 matrix.
pub fn min_eig(m: &[f64], k: usize) -> f64 {
    match k {
        1 => m[0],
        2 => {
            let (a, b, d) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            mid - rad
        }
        _ => unimplemented!("reference eigenvalues only for k <= 2"),
    }
}

/// A random model with a random known parameter.
pub fn random_model(rng: &mut impl Rng, which: usize) -> Model {
    match which % 4 {
        0 => Model::GaussianCase1 {
            sigma: rng.random_range(0.3..3.0),
        },
        1 => Model::GaussianCase2 {
            alpha: rng.random_range(-2.0..2.0),
        },
        2 => Model::GaussianCase3,
        _ => Model::Poisson,
    }
}

/// Random natural parameter for `model`.
pub fn random_theta(rng: &mut impl Rng, model: &Model) -> Vec<f64> {
    match model {
        Model::GaussianCase1 { .. } => vec![rng.random_range(-3.0..3.0)],
        Model::GaussianCase2 { .. } => vec![rng.random_range(0.2..5.0)],
        Model::GaussianCase3 => {
            let alpha: f64 = rng.random_range(-3.0..3.0);
            let sigma: f64 = rng.random_range(0.3..3.0);
            vec![alpha / (sigma * sigma), 1.0 / (sigma * sigma)]
        }
        Model::Poisson => vec![rng.random_range(-1.0..2.0)],
    }
}

/// Random weight and a threshold within `zmax` standard deviations of the
/// observation's mean (Poisson: within a few standard deviations, `>= 0`).
pub fn random_observation(rng: &mut impl Rng, model: &Model, theta: &[f64], zmax: f64) -> (f64, f64) {
    let w: f64 = rng.random_range(0.2..2.0) * if rng.random_bool(0.3) { -1.0 } else { 1.0 };
    let z: f64 = rng.random_range(-zmax..zmax);
    match *model {
        Model::GaussianCase1 { sigma } => (w, w * theta[0] + sigma * z),
        Model::GaussianCase2 { alpha } => (w, w * alpha + theta[0].sqrt().recip() * z),
        Model::GaussianCase3 => {
            let s = theta[1].sqrt().recip();
            (w, w * theta[0] / theta[1] + s * z)
        }
        Model::Poisson => {
            let w = w.abs();
            let lambda = (w * theta[0]).exp();
            let tau = (lambda + z * lambda.sqrt()).max(0.0);
            (w, tau)
        }
    }
}
