//! Generic exponential-family machinery for 1-bit censored observations.
//!
//! An observation draws `X` from an exponential family with natural
//! parameter `eta = V theta` and only reveals the bit `+1` when
//! `X <= tau` and `-1` otherwise. Everything here is expressed through
//! the [`ExpFamily`] trait: families report how the mean and covariance
//! of the sufficient statistic shift once the bit is known, and the
//! score and Hessian of the censored log-likelihood follow by the chain
//! rule through `V`.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::special::Accumulator;

/// Sufficient-statistic sized vector (inline up to four entries).
pub type Stat = SmallVec<[f64; 4]>;
/// Row-major `d x d` matrix over the sufficient statistic.
pub type StatCov = SmallVec<[f64; 16]>;

/// Datasets larger than this are summed with compensation.
pub const COMPENSATION_THRESHOLD: usize = 10_000;

/// The censoring bit: `Below` (`+1`) when `X <= tau`, `Above` (`-1`) otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Bit {
    Below,
    Above,
}

impl Bit {
    pub const BOTH: [Bit; 2] = [Bit::Below, Bit::Above];

    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Bit::Below => 1,
            Bit::Above => -1,
        }
    }

    pub fn from_sign(value: i64) -> Result<Self> {
        match value {
            1 => Ok(Bit::Below),
            -1 => Ok(Bit::Above),
            other => Err(Error::InvalidInput(format!("bit must be +1 or -1, got {other}"))),
        }
    }

    /// Applies the censoring rule to a realized `x`.
    #[inline]
    pub fn censor(x: f64, tau: f64) -> Self {
        if x <= tau {
            Bit::Below
        } else {
            Bit::Above
        }
    }
}

impl TryFrom<i8> for Bit {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        Bit::from_sign(v as i64)
    }
}

impl From<Bit> for i8 {
    fn from(b: Bit) -> i8 {
        b.sign()
    }
}

/// Per-coordinate parameter constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    Unbounded,
    StrictlyPositive,
    StrictlyNegative,
}

impl Constraint {
    pub fn admits(self, x: f64) -> bool {
        x.is_finite()
            && match self {
                Constraint::Unbounded => true,
                Constraint::StrictlyPositive => x > 0.0,
                Constraint::StrictlyNegative => x < 0.0,
            }
    }

    pub fn label(self) -> &'static str {
        match self {
            Constraint::Unbounded => "finite",
            Constraint::StrictlyPositive => "strictly positive",
            Constraint::StrictlyNegative => "strictly negative",
        }
    }
}

/// Parameter vector together with its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    values: Vec<f64>,
    domain: Vec<Constraint>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, domain: Vec<Constraint>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("parameter vector must have k >= 1".into()));
        }
        if values.len() != domain.len() {
            return Err(Error::InvalidInput(format!(
                "parameter has {} values but {} constraints",
                values.len(),
                domain.len()
            )));
        }
        Self::check(&values, &domain)?;
        Ok(Self { values, domain })
    }

    pub fn unbounded(values: Vec<f64>) -> Result<Self> {
        let domain = vec![Constraint::Unbounded; values.len()];
        Self::new(values, domain)
    }

    fn check(values: &[f64], domain: &[Constraint]) -> Result<()> {
        for (i, (&v, &c)) in values.iter().zip(domain).enumerate() {
            if !c.admits(v) {
                return Err(Error::Domain {
                    coordinate: i,
                    value: v,
                    constraint: c.label(),
                });
            }
        }
        Ok(())
    }

    /// Same domain, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.domain.clone())
    }

    pub fn admits(&self, values: &[f64]) -> bool {
        values.len() == self.domain.len() && values.iter().zip(&self.domain).all(|(&v, &c)| c.admits(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &[Constraint] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Design of a single observation: `eta = V theta` and threshold `tau`.
///
/// `offset` is a known location used by families whose statistic is
/// centered (known-mean Gaussian); other families require it to be zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationDesign {
    d: usize,
    k: usize,
    v: SmallVec<[f64; 8]>,
    tau: f64,
    #[serde(default)]
    offset: f64,
}

impl ObservationDesign {
    /// `v` is the row-major `d x k` design matrix.
    pub fn new(d: usize, k: usize, v: &[f64], tau: f64) -> Result<Self> {
        Self::with_offset(d, k, v, tau, 0.0)
    }

    pub fn with_offset(d: usize, k: usize, v: &[f64], tau: f64, offset: f64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidInput("design dimensions must be at least 1".into()));
        }
        if v.len() != d * k {
            return Err(Error::InvalidInput(format!(
                "design matrix has {} entries, expected {d}x{k}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("design matrix entries must be finite".into()));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidThreshold {
                tau,
                reason: "threshold must be finite",
            });
        }
        if !offset.is_finite() {
            return Err(Error::InvalidInput("offset must be finite".into()));
        }
        Ok(Self {
            d,
            k,
            v: SmallVec::from_slice(v),
            tau,
            offset,
        })
    }

    /// Scalar design (`d = k = 1`).
    pub fn scalar(v: f64, tau: f64) -> Result<Self> {
        Self::new(1, 1, &[v], tau)
    }

    pub fn stat_dim(&self) -> usize {
        self.d
    }

    pub fn param_dim(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn matrix(&self) -> &[f64] {
        &self.v
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.v[row * self.k + col]
    }

    /// `eta = V theta`.
    pub fn natural_parameter(&self, theta: &[f64]) -> Stat {
        debug_assert_eq!(theta.len(), self.k);
        (0..self.d)
            .map(|j| (0..self.k).map(|r| self.entry(j, r) * theta[r]).sum())
            .collect()
    }

    /// Max absolute row sum.
    pub fn infinity_norm(&self) -> f64 {
        (0..self.d)
            .map(|j| (0..self.k).map(|r| self.entry(j, r).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `V^T delta` for a statistic-space vector.
    pub fn pull_back(&self, delta: &[f64]) -> SmallVec<[f64; 4]> {
        (0..self.k)
            .map(|r| (0..self.d).map(|j| self.entry(j, r) * delta[j]).sum())
            .collect()
    }

    /// `V^T M V` for a row-major `d x d` matrix, added into `out` (row-major `k x k`) with `weight`.
    pub fn add_congruence(&self, m: &[f64], weight: f64, out: &mut [f64]) {
        let (d, k) = (self.d, self.k);
        for r in 0..k {
            for s in r..k {
                let mut acc = 0.0;
                for j in 0..d {
                    let vjr = self.entry(j, r);
                    if vjr == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        acc += vjr * m[j * d + l] * self.entry(l, s);
                    }
                }
                out[r * k + s] += weight * acc;
                if s != r {
                    out[s * k + r] += weight * acc;
                }
            }
        }
    }

    /// Bitwise key used to aggregate identical designs.
    fn key(&self) -> DesignKey {
        (
            self.v.iter().map(|x| x.to_bits()).collect(),
            self.tau.to_bits(),
            self.offset.to_bits(),
        )
    }
}

/// Bit patterns of `(V, tau, offset)`.
type DesignKey = (Vec<u64>, u64, u64);

/// One censored observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub bit: Bit,
    pub design: ObservationDesign,
}

/// Bits paired with their designs; all designs share `(d, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredDataset {
    observations: Vec<Observation>,
}

impl CensoredDataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::InvalidInput("dataset must contain at least one observation".into()))?;
        let (d, k) = (first.design.d, first.design.k);
        if let Some((i, _)) = observations
            .iter()
            .enumerate()
            .find(|(_, o)| o.design.d != d || o.design.k != k)
        {
            return Err(Error::InvalidInput(format!(
                "observation {i} has a design of different shape than observation 0 ({d}x{k})"
            )));
        }
        Ok(Self { observations })
    }

    pub fn from_parts(bits: &[Bit], designs: &[ObservationDesign]) -> Result<Self> {
        if bits.len() != designs.len() {
            return Err(Error::InvalidInput("bits and designs differ in length".into()));
        }
        Self::new(
            bits.iter()
                .zip(designs)
                .map(|(&bit, design)| Observation {
                    bit,
                    design: design.clone(),
                })
                .collect(),
        )
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn stat_dim(&self) -> usize {
        self.observations[0].design.d
    }

    pub fn param_dim(&self) -> usize {
        self.observations[0].design.k
    }

    pub fn designs(&self) -> impl Iterator<Item = &ObservationDesign> {
        self.observations.iter().map(|o| &o.design)
    }

    /// Fraction of `+1` bits.
    pub fn below_fraction(&self) -> f64 {
        let below = self.observations.iter().filter(|o| o.bit == Bit::Below).count();
        below as f64 / self.len() as f64
    }

    /// Collapses identical `(design, bit)` pairs into weighted groups,
    /// ordered by their bitwise key so the result does not depend on the
    /// order of observations.
    pub fn aggregate(&self) -> AggregatedDataset {
        let mut keyed: Vec<_> = self
            .observations
            .iter()
            .enumerate()
            .map(|(i, o)| (o.design.key(), o.bit, i))
            .collect();
        keyed.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        let mut groups: Vec<WeightedObservation> = Vec::new();
        let mut prev: Option<(&DesignKey, Bit)> = None;
        for (key, bit, i) in &keyed {
            if prev == Some((key, *bit)) {
                groups.last_mut().expect("group exists").count += 1;
            } else {
                groups.push(WeightedObservation {
                    observation: self.observations[*i].clone(),
                    first_index: *i,
                    count: 1,
                });
                prev = Some((key, *bit));
            }
        }
        AggregatedDataset { groups, n: self.len() }
    }
}

/// A distinct observation and its multiplicity.
#[derive(Debug, Clone)]
pub struct WeightedObservation {
    pub observation: Observation,
    pub first_index: usize,
    pub count: usize,
}

/// Weighted view of a dataset used by the optimizer.
#[derive(Debug, Clone)]
pub struct AggregatedDataset {
    groups: Vec<WeightedObservation>,
    n: usize,
}

impl AggregatedDataset {
    pub fn groups(&self) -> &[WeightedObservation] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Probabilities of the two bits for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensorSplit {
    /// `P(B = +1) = F(tau)`.
    pub below: f64,
    /// `P(B = -1) = 1 - F(tau)`.
    pub above: f64,
    pub log_below: f64,
    pub log_above: f64,
}

impl CensorSplit {
    #[inline]
    pub fn prob(&self, bit: Bit) -> f64 {
        match bit {
            Bit::Below => self.below,
            Bit::Above => self.above,
        }
    }

    #[inline]
    pub fn log_prob(&self, bit: Bit) -> f64 {
        match bit {
            Bit::Below => self.log_below,
            Bit::Above => self.log_above,
        }
    }
}

/// How the first two moments of `T` move once the bit is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalShift {
    /// `E[T | B = b] - E[T]`.
    pub mean: Stat,
    /// `Cov(T | B = b) - Cov(T)`, row-major.
    pub cov: StatCov,
}

/// Unconditional mean and covariance of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Stat,
    pub cov: StatCov,
}

/// A single-observation exponential family `h(x) exp(<eta, T(x)> - phi(eta))`.
///
/// Implementations are stateless descriptions; every method is a pure
/// function of its arguments.
pub trait ExpFamily: Send + Sync {
    /// Stable registry name.
    fn name(&self) -> &str;

    /// Dimension `d` of the sufficient statistic.
    fn stat_dim(&self) -> usize;

    /// Natural domain of `theta` under this family's canonical design.
    fn parameter_domain(&self, k: usize) -> Vec<Constraint> {
        vec![Constraint::Unbounded; k]
    }

    /// Rejects thresholds that are not interior points of the support.
    fn validate_threshold(&self, tau: f64) -> Result<()>;

    /// Rejects designs the family cannot interpret (wrong `d`, offsets, thresholds).
    fn validate_design(&self, design: &ObservationDesign) -> Result<()> {
        if design.stat_dim() != self.stat_dim() {
            return Err(Error::InvalidInput(format!(
                "{} expects d = {}, design has d = {}",
                self.name(),
                self.stat_dim(),
                design.stat_dim()
            )));
        }
        if design.offset() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "{} does not use observation offsets",
                self.name()
            )));
        }
        self.validate_threshold(design.tau())
    }

    fn log_partition(&self, eta: &[f64]) -> Result<f64>;

    /// Base measure `h(x)`; not needed by any likelihood computation.
    fn base_measure(&self, x: f64) -> f64;

    fn sufficient_statistic(&self, x: f64, offset: f64) -> Stat;

    /// `F_X(x; eta)`.
    fn cdf(&self, x: f64, eta: &[f64], offset: f64) -> Result<f64>;

    /// Probabilities of both bits from a single tail evaluation.
    fn split(&self, eta: &[f64], design: &ObservationDesign) -> Result<CensorSplit>;

    fn conditional_shift(&self, eta: &[f64], design: &ObservationDesign, bit: Bit) -> Result<ConditionalShift>;

    fn moments(&self, eta: &[f64], offset: f64) -> Result<Moments>;

    /// `E[||T||^3]`.
    fn third_abs_moment(&self, eta: &[f64], offset: f64) -> Result<f64>;

    fn sample(&self, eta: &[f64], offset: f64, rng: &mut dyn RngCore) -> Result<f64>;

    /// Moment-style starting point for the optimizer, if the family has one.
    fn initial_guess(&self, _data: &CensoredDataset) -> Option<Vec<f64>> {
        None
    }

    /// True when each observation's log-probability is monotone along the
    /// single parameter of a `k = 1` design. Enables the one-sided-data check.
    fn monotone_scalar_likelihood(&self) -> bool {
        false
    }
}

/// `E[T | B = b]` assembled from the unconditional mean and the shift.
pub fn conditional_mean<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    design: &ObservationDesign,
    bit: Bit,
) -> Result<Stat> {
    let eta = design.natural_parameter(theta);
    let m = family.moments(&eta, design.offset())?;
    let s = family.conditional_shift(&eta, design, bit)?;
    Ok(m.mean.iter().zip(&s.mean).map(|(a, b)| a + b).collect())
}

fn check_theta(theta: &ParameterVector, design: &ObservationDesign) -> Result<()> {
    if theta.len() != design.param_dim() {
        return Err(Error::InvalidInput(format!(
            "parameter has k = {}, design expects k = {}",
            theta.len(),
            design.param_dim()
        )));
    }
    Ok(())
}

/// `P(B = b)` for one observation.
pub fn censored_prob<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &ParameterVector,
    design: &ObservationDesign,
    bit: Bit,
) -> Result<f64> {
    check_theta(theta, design)?;
    let eta = design.natural_parameter(theta.values());
    Ok(family.split(&eta, design)?.prob(bit))
}

/// Score of a single observation, `V^T (E[T | b] - E[T])`.
pub fn observation_score<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    design: &ObservationDesign,
    bit: Bit,
) -> Result<SmallVec<[f64; 4]>> {
    let eta = design.natural_parameter(theta);
    let shift = family.conditional_shift(&eta, design, bit)?;
    Ok(design.pull_back(&shift.mean))
}

/// Hessian of a single observation's log-probability, row-major `k x k`.
pub fn observation_hessian<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    design: &ObservationDesign,
    bit: Bit,
) -> Result<Vec<f64>> {
    let eta = design.natural_parameter(theta);
    let shift = family.conditional_shift(&eta, design, bit)?;
    let k = design.param_dim();
    let mut out = vec![0.0; k * k];
    design.add_congruence(&shift.cov, 1.0, &mut out);
    Ok(out)
}

/// Value, gradient and Hessian of the censored log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub log_likelihood: f64,
    pub score: Vec<f64>,
    /// Row-major `k x k`; empty when not requested.
    pub hessian: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Order {
    Value,
    Gradient,
    Hessian,
}

/// Walks `(observation, index, weight)` triples in the given order and
/// accumulates whatever `order` asks for.
pub(crate) fn accumulate<'a, F, I>(
    family: &F,
    theta: &[f64],
    k: usize,
    n: usize,
    items: I,
    order: Order,
) -> Result<Evaluation>
where
    F: ExpFamily + ?Sized,
    I: Iterator<Item = (&'a Observation, usize, f64)>,
{
    let compensated = n > COMPENSATION_THRESHOLD;
    let mut ll = Accumulator::new(compensated);
    let mut score = vec![Accumulator::new(compensated); if order == Order::Value { 0 } else { k }];
    let mut hess = vec![Accumulator::new(compensated); if order == Order::Hessian { k * k } else { 0 }];
    let mut scratch = vec![0.0; k * k];

    for (obs, index, weight) in items {
        let design = &obs.design;
        let eta = design.natural_parameter(theta);
        let split = family.split(&eta, design)?;
        let lp = split.log_prob(obs.bit);
        if lp.is_nan() || lp == f64::NEG_INFINITY {
            return Err(Error::DegenerateLikelihood { index });
        }
        ll.add(weight * lp);
        if order == Order::Value {
            continue;
        }
        let shift = family.conditional_shift(&eta, design, obs.bit)?;
        for (acc, g) in score.iter_mut().zip(design.pull_back(&shift.mean)) {
            acc.add(weight * g);
        }
        if order == Order::Hessian {
            scratch.iter_mut().for_each(|x| *x = 0.0);
            design.add_congruence(&shift.cov, weight, &mut scratch);
            for (acc, h) in hess.iter_mut().zip(&scratch) {
                acc.add(*h);
            }
        }
    }

    let mut hessian: Vec<f64> = hess.iter().map(Accumulator::value).collect();
    symmetrize(&mut hessian, k);
    Ok(Evaluation {
        log_likelihood: ll.value(),
        score: score.iter().map(Accumulator::value).collect(),
        hessian,
    })
}

/// Replaces a row-major square matrix by `(A + A^T) / 2`.
pub fn symmetrize(m: &mut [f64], k: usize) {
    if m.len() != k * k {
        return;
    }
    for r in 0..k {
        for s in (r + 1)..k {
            let avg = 0.5 * (m[r * k + s] + m[s * k + r]);
            m[r * k + s] = avg;
            m[s * k + r] = avg;
        }
    }
}

fn check_dataset(theta: &ParameterVector, data: &CensoredDataset) -> Result<()> {
    check_theta(theta, &data.observations[0].design)
}

fn sequential(data: &CensoredDataset) -> impl Iterator<Item = (&Observation, usize, f64)> {
    data.observations.iter().enumerate().map(|(i, o)| (o, i, 1.0))
}

/// `sum_i log P(B_i = b_i)`, summed left to right.
pub fn log_likelihood<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &ParameterVector,
    data: &CensoredDataset,
) -> Result<f64> {
    check_dataset(theta, data)?;
    let k = theta.len();
    Ok(accumulate(family, theta.values(), k, data.len(), sequential(data), Order::Value)?.log_likelihood)
}

/// Gradient of [`log_likelihood`].
pub fn score<F: ExpFamily + ?Sized>(family: &F, theta: &ParameterVector, data: &CensoredDataset) -> Result<Vec<f64>> {
    check_dataset(theta, data)?;
    let k = theta.len();
    Ok(accumulate(family, theta.values(), k, data.len(), sequential(data), Order::Gradient)?.score)
}

/// Hessian of [`log_likelihood`], row-major `k x k`, exactly symmetric.
pub fn hessian<F: ExpFamily + ?Sized>(family: &F, theta: &ParameterVector, data: &CensoredDataset) -> Result<Vec<f64>> {
    check_dataset(theta, data)?;
    let k = theta.len();
    Ok(accumulate(family, theta.values(), k, data.len(), sequential(data), Order::Hessian)?.hessian)
}

/// Value, score and Hessian in one pass over the aggregated data.
pub fn evaluate_aggregated<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    data: &AggregatedDataset,
    with_hessian: bool,
) -> Result<Evaluation> {
    let k = theta.len();
    let items = data
        .groups
        .iter()
        .map(|g| (&g.observation, g.first_index, g.count as f64));
    let order = if with_hessian { Order::Hessian } else { Order::Gradient };
    accumulate(family, theta, k, data.n, items, order)
}

/// Log-likelihood of the aggregated data.
pub fn log_likelihood_aggregated<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    data: &AggregatedDataset,
) -> Result<f64> {
    let items = data
        .groups
        .iter()
        .map(|g| (&g.observation, g.first_index, g.count as f64));
    Ok(accumulate(family, theta, theta.len(), data.n, items, Order::Value)?.log_likelihood)
}

/// Third derivatives of one observation's log-probability, `k x k x k`
/// flattened, by central differences of the analytic Hessian.
///
/// Diagnostic for the bounded-third-derivative regularity condition;
/// the optimizer never calls it.
pub fn observation_third_derivative<F: ExpFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    design: &ObservationDesign,
    bit: Bit,
) -> Result<Vec<f64>> {
    let k = theta.len();
    let mut out = vec![0.0; k * k * k];
    let mut probe = theta.to_vec();
    for t in 0..k {
        let h = 1e-4 * theta[t].abs().max(1.0);
        probe[t] = theta[t] + h;
        let plus = observation_hessian(family, &probe, design, bit)?;
        probe[t] = theta[t] - h;
        let minus = observation_hessian(family, &probe, design, bit)?;
        probe[t] = theta[t];
        for rs in 0..k * k {
            out[rs * k + t] = (plus[rs] - minus[rs]) / (2.0 * h);
        }
    }
    Ok(out)
}
