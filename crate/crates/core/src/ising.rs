//! The Ising family `e(B^k_2)` on the complete graph: exact enumeration of
//! the Boltzmann distribution, sampling, and maximum likelihood fitting gated
//! by the exact existence test.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cube::{self, check_dim, Vertex};
use crate::error::{Error, Result};
use crate::uniqueness::{is_unique_cone, UniquenessVerdict};
use crate::walsh::{basis_masks, walsh_sign, CoeffVector, WalshIndex};

/// Largest `k` for exact enumeration in this module.
pub const MAX_ISING_DIM: u32 = 16;

/// Walsh masks of the non-constant features `x_i` and `x_i x_j`, in basis order.
fn feature_masks(k: u32) -> Vec<u32> {
    basis_masks(k, 2).into_iter().skip(1).collect()
}

fn pair_mask(i: u32, j: u32) -> u32 {
    1 << i | 1 << j
}

/// Natural parameters of the full `B^k_2` family: an offset, one field per
/// coordinate and one coupling per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingParams {
    k: u32,
    pub theta0: f64,
    /// Aligned with [`IsingParams::features`].
    theta: Vec<f64>,
}

impl IsingParams {
    pub fn zeros(k: u32) -> Result<Self> {
        check_dim(k, MAX_ISING_DIM)?;
        Ok(Self { k, theta0: 0.0, theta: vec![0.0; feature_masks(k).len()] })
    }

    /// `fields[i]` multiplies `x_{i+1}`; couplings are keyed by 0-based `(i, j)`, `i < j`.
    pub fn from_parts(k: u32, theta0: f64, fields: &[f64], couplings: &[((u32, u32), f64)]) -> Result<Self> {
        let mut p = Self::zeros(k)?;
        if fields.len() != k as usize {
            return Err(Error::InvalidArgument(format!("expected {k} fields, got {}", fields.len())));
        }
        p.theta0 = theta0;
        for (i, &f) in fields.iter().enumerate() {
            p.set_mask(1 << i, f);
        }
        for &((i, j), c) in couplings {
            if i >= j || j >= k {
                return Err(Error::InvalidArgument(format!("bad pair ({i}, {j}) for k={k}")));
            }
            p.set_mask(pair_mask(i, j), c);
        }
        p.check_finite()?;
        Ok(p)
    }

    fn from_vector(k: u32, theta: Vec<f64>) -> Self {
        Self { k, theta0: 0.0, theta }
    }

    fn check_finite(&self) -> Result<()> {
        if self.theta0.is_finite() && self.theta.iter().all(|t| t.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("parameters must be finite".into()))
        }
    }

    fn set_mask(&mut self, mask: u32, v: f64) {
        let idx = feature_masks(self.k).iter().position(|&m| m == mask).expect("degree <= 2 mask");
        self.theta[idx] = v;
    }

    pub fn dim(&self) -> u32 {
        self.k
    }

    pub fn features(&self) -> Vec<WalshIndex> {
        feature_masks(self.k).into_iter().map(|m| WalshIndex::new(self.k, m).expect("valid mask")).collect()
    }

    pub fn field(&self, i: u32) -> f64 {
        self.get_mask(1 << i)
    }

    pub fn coupling(&self, i: u32, j: u32) -> f64 {
        self.get_mask(pair_mask(i.min(j), i.max(j)))
    }

    fn get_mask(&self, mask: u32) -> f64 {
        feature_masks(self.k).iter().position(|&m| m == mask).map_or(0.0, |i| self.theta[i])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    /// `H(x) = theta0 + sum_i theta_i x_i + sum_{i<j} theta_ij x_i x_j`.
    pub fn energy(&self, x: Vertex) -> f64 {
        self.energy_bits(&feature_masks(self.k), x.bits())
    }

    fn energy_bits(&self, masks: &[u32], bits: u32) -> f64 {
        self.theta0
            + masks
                .iter()
                .zip(&self.theta)
                .map(|(&m, &t)| if walsh_sign(m, bits) > 0 { t } else { -t })
                .sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().fold(0.0, |a, t| a.max(t.abs()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let k = self.k;
        let fields: Vec<f64> = (0..k).map(|i| self.field(i)).collect();
        let mut couplings = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                couplings.push(serde_json::json!({"i": i + 1, "j": j + 1, "value": self.coupling(i, j)}));
            }
        }
        serde_json::json!({"k": k, "theta0": self.theta0, "theta_i": fields, "theta_ij": couplings})
    }
}

/// The literal Boltzmann model: uniform field `b` and inverse temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneousParams {
    pub b: f64,
    pub beta: f64,
}

impl HomogeneousParams {
    pub fn to_ising(self, k: u32) -> Result<IsingParams> {
        let couplings: Vec<_> = (0..k).flat_map(|i| (i + 1..k).map(move |j| ((i, j), self.beta))).collect();
        IsingParams::from_parts(k, 0.0, &vec![self.b; k as usize], &couplings)
    }
}

/// Streaming log-sum-exp of `H` over all `2^k` states.
pub fn log_partition(p: &IsingParams) -> f64 {
    let masks = feature_masks(p.k);
    log_sum_exp((0..=cube::full_mask(p.k)).map(|bits| p.energy_bits(&masks, bits)))
}

/// Probabilities of every state in ascending bit order.
pub fn distribution(p: &IsingParams) -> Vec<f64> {
    let masks = feature_masks(p.k);
    let z = log_partition(p);
    (0..=cube::full_mask(p.k)).map(|b| (p.energy_bits(&masks, b) - z).exp()).collect()
}

pub fn probability(p: &IsingParams, x: Vertex) -> Result<f64> {
    if x.dim() != p.k {
        return Err(Error::DimensionMismatch { left: p.k, right: x.dim() });
    }
    Ok((p.energy(x) - log_partition(p)).exp())
}

/// Feature means and covariance under `p`.
fn moment_stats(p: &IsingParams) -> (DVector<f64>, DMatrix<f64>) {
    let masks = feature_masks(p.k);
    let d = masks.len();
    let probs = distribution(p);
    let mut mean = DVector::zeros(d);
    let mut second = DMatrix::zeros(d, d);
    let mut f = DVector::zeros(d);
    for (bits, &pr) in probs.iter().enumerate() {
        for (a, &m) in masks.iter().enumerate() {
            f[a] = walsh_sign(m, bits as u32) as f64;
        }
        mean.axpy(pr, &f, 1.0);
        second.ger(pr, &f, &f, 1.0);
    }
    let cov = second - &mean * mean.transpose();
    (mean, cov)
}

/// `E_p[w_L]` for every `|L| <= 2`, including `E[w_∅] = 1`.
pub fn moments(p: &IsingParams) -> BTreeMap<WalshIndex, f64> {
    let (mean, _) = moment_stats(p);
    let mut out = BTreeMap::new();
    out.insert(WalshIndex::new(p.k, 0).expect("valid"), 1.0);
    for (l, m) in p.features().into_iter().zip(mean.iter()) {
        out.insert(l, *m);
    }
    out
}

/// Counts per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    k: u32,
    counts: BTreeMap<u32, u64>,
}

impl Sample {
    pub fn new(k: u32) -> Result<Self> {
        check_dim(k, cube::HARD_MAX_DIM)?;
        Ok(Self { k, counts: BTreeMap::new() })
    }

    pub fn from_points(points: &[Vertex]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySample)?;
        let mut s = Self::new(first.dim())?;
        for &p in points {
            s.add(p, 1)?;
        }
        Ok(s)
    }

    pub fn add(&mut self, x: Vertex, count: u64) -> Result<()> {
        if x.dim() != self.k {
            return Err(Error::DimensionMismatch { left: self.k, right: x.dim() });
        }
        if count > 0 {
            *self.counts.entry(x.bits()).or_insert(0) += count;
        }
        Ok(())
    }

    pub fn dim(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn support(&self) -> Vec<Vertex> {
        self.counts.keys().map(|&b| Vertex::from_raw(self.k, b)).collect()
    }

    pub fn counts(&self) -> impl Iterator<Item = (Vertex, u64)> + '_ {
        self.counts.iter().map(|(&b, &c)| (Vertex::from_raw(self.k, b), c))
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self { k: self.k, counts: self.counts.iter().map(|(&b, &c)| (b, c * factor)).collect() }
    }

    /// Lines `<vertex-string> <count>` in ascending state order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, c) in self.counts() {
            let _ = writeln!(out, "{v} {c}");
        }
        out
    }

    /// Parses the line format; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sample: Option<Sample> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(v), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("line {}: expected `<vertex> <count>`", lineno + 1)));
            };
            let v: Vertex = v.parse()?;
            let c: u64 = c.parse().map_err(|_| Error::Parse(format!("line {}: bad count {c:?}", lineno + 1)))?;
            let s = match &mut sample {
                Some(s) => s,
                None => sample.insert(Sample::new(v.dim())?),
            };
            s.add(v, c)?;
        }
        match sample {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err(Error::EmptySample),
        }
    }

    fn empirical_means(&self, masks: &[u32]) -> DVector<f64> {
        let n = self.n() as f64;
        DVector::from_iterator(
            masks.len(),
            masks.iter().map(|&m| {
                self.counts.iter().map(|(&b, &c)| walsh_sign(m, b) as f64 * c as f64).sum::<f64>() / n
            }),
        )
    }
}

fn cumulative(p: &IsingParams) -> Vec<f64> {
    let mut acc = 0.0;
    distribution(p)
        .into_iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> u32 {
    let u: f64 = rng.gen::<f64>() * cdf.last().copied().unwrap_or(1.0);
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u32
}

/// `n` iid draws, deterministic in `seed`.
pub fn sample_from(p: &IsingParams, n: u64, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let cdf = cumulative(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Sample::new(p.k)?;
    for _ in 0..n {
        *s.counts.entry(draw(&cdf, &mut rng)).or_insert(0) += 1;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitStatus {
    Fitted,
    NonExistent,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub status: FitStatus,
    pub params: Option<IsingParams>,
    /// Cone witness on the support when the MLE does not exist.
    pub witness: Option<CoeffVector>,
    /// `max_L |E_theta[w_L] - mean of w_L|`.
    pub residual: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": format!("{:?}", self.status),
            "params": self.params.as_ref().map(IsingParams::to_json),
            "witness": self.witness.as_ref().map(CoeffVector::to_json),
            "residual": self.residual,
            "iterations": self.iterations,
        })
    }
}

/// Condition number above which the Newton step is replaced by the gradient.
const CONDITION_LIMIT: f64 = 1e12;

/// Mean log-likelihood `theta . m_hat - A(theta)` for the features in `masks`.
struct Objective<'a> {
    k: u32,
    masks: &'a [u32],
    target: DVector<f64>,
}

impl Objective<'_> {
    /// Full-family parameters from reduced coordinates.
    fn expand(&self, x: &DVector<f64>) -> IsingParams {
        let all = feature_masks(self.k);
        let mut theta = vec![0.0; all.len()];
        for (a, &m) in self.masks.iter().enumerate() {
            for (b, &fm) in all.iter().enumerate() {
                if feature_weight(m, fm) {
                    theta[b] += x[a];
                }
            }
        }
        IsingParams::from_vector(self.k, theta)
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let p = self.expand(x);
        x.dot(&self.target) - log_partition(&p)
    }

    /// Gradient `m_hat - E[f]` and Hessian `-Cov[f]` in reduced coordinates.
    fn derivatives(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>, f64) {
        let p = self.expand(x);
        let probs = distribution(&p);
        let d = self.masks.len();
        let mut mean = DVector::zeros(d);
        let mut second = DMatrix::zeros(d, d);
        let mut f = DVector::zeros(d);
        for (bits, &pr) in probs.iter().enumerate() {
            for (a, &m) in self.masks.iter().enumerate() {
                f[a] = reduced_feature(self.k, m, bits as u32);
            }
            mean.axpy(pr, &f, 1.0);
            second.ger(pr, &f, &f, 1.0);
        }
        let cov = second - &mean * mean.transpose();
        let grad = &self.target - mean;
        let residual = grad.amax();
        (grad, cov, residual)
    }
}

// Reduced features are either single Walsh functions (the full family) or
// the two homogeneous sums, encoded with the sentinel masks below.
const HOMOGENEOUS_FIELD: u32 = u32::MAX;
const HOMOGENEOUS_PAIR: u32 = u32::MAX - 1;

fn feature_weight(reduced: u32, full: u32) -> bool {
    match reduced {
        HOMOGENEOUS_FIELD => full.count_ones() == 1,
        HOMOGENEOUS_PAIR => full.count_ones() == 2,
        m => m == full,
    }
}

fn reduced_feature(k: u32, reduced: u32, bits: u32) -> f64 {
    match reduced {
        HOMOGENEOUS_FIELD => (0..k).map(|i| walsh_sign(1 << i, bits) as f64).sum(),
        HOMOGENEOUS_PAIR => {
            let s: f64 = (0..k).map(|i| walsh_sign(1 << i, bits) as f64).sum();
            (s * s - k as f64) / 2.0
        }
        m => walsh_sign(m, bits) as f64,
    }
}

fn target_means(sample: &Sample, masks: &[u32]) -> DVector<f64> {
    let n = sample.n() as f64;
    DVector::from_iterator(
        masks.len(),
        masks.iter().map(|&m| {
            sample.counts.iter().map(|(&b, &c)| reduced_feature(sample.k, m, b) * c as f64).sum::<f64>() / n
        }),
    )
}

fn ascent_direction(grad: &DVector<f64>, cov: &DMatrix<f64>) -> DVector<f64> {
    let eig = cov.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo <= 0.0 || hi / lo > CONDITION_LIMIT {
        return grad.clone();
    }
    match cov.clone().cholesky() {
        Some(ch) => ch.solve(grad),
        None => grad.clone(),
    }
}

/// Damped Newton with step halving until the moment residual is below `tol`.
fn newton(obj: &Objective<'_>, tol: f64, max_iter: usize) -> (DVector<f64>, f64, usize, bool) {
    let mut x = DVector::zeros(obj.masks.len());
    let mut value = obj.value(&x);
    for it in 0..=max_iter {
        let (grad, cov, residual) = obj.derivatives(&x);
        if residual <= tol {
            return (x, residual, it, true);
        }
        if it == max_iter {
            return (x, residual, it, false);
        }
        let dir = ascent_direction(&grad, &cov);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = &x + &dir * step;
            let v = obj.value(&cand);
            if v >= value {
                x = cand;
                value = v;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            return (x, residual, it, false);
        }
    }
    unreachable!()
}

fn existence_witness(sample: &Sample) -> Result<Option<CoeffVector>> {
    match is_unique_cone(sample.k, 2, &sample.support())? {
        UniquenessVerdict::Unique => Ok(None),
        UniquenessVerdict::NotUnique { witness } => Ok(Some(witness)),
    }
}

/// Maximum likelihood fit of the full `B^k_2` family. The existence test runs
/// first; when the support is not a set of uniqueness for the cone the
/// supremum is not attained and no optimization is attempted.
pub fn fit_mle(sample: &Sample, tol: f64, max_iter: usize) -> Result<FitResult> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    check_dim(sample.k, MAX_ISING_DIM)?;
    if let Some(witness) = existence_witness(sample)? {
        return Ok(FitResult {
            status: FitStatus::NonExistent,
            params: None,
            witness: Some(witness),
            residual: f64::NAN,
            iterations: 0,
        });
    }
    let masks = feature_masks(sample.k);
    let obj = Objective { k: sample.k, masks: &masks, target: sample.empirical_means(&masks) };
    let (x, residual, iterations, converged) = newton(&obj, tol, max_iter);
    let mut params = obj.expand(&x);
    params.theta0 = -log_partition(&params);
    Ok(FitResult {
        status: if converged { FitStatus::Fitted } else { FitStatus::Budget },
        params: Some(params),
        witness: None,
        residual,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousFit {
    pub status: FitStatus,
    pub params: HomogeneousParams,
    pub residual: f64,
    pub iterations: usize,
    /// Whether the support passes the full-family existence test, which
    /// guarantees the restricted maximum exists as well.
    pub full_family_exists: bool,
}

/// Two-parameter fit of the field `b` and inverse temperature `beta`.
pub fn fit_homogeneous(sample: &Sample, tol: f64, max_iter: usize) -> Result<HomogeneousFit> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    check_dim(sample.k, MAX_ISING_DIM)?;
    let full_family_exists = existence_witness(sample)?.is_none();
    let masks = [HOMOGENEOUS_FIELD, HOMOGENEOUS_PAIR];
    let obj = Objective { k: sample.k, masks: &masks, target: target_means(sample, &masks) };
    let (x, residual, iterations, converged) = newton(&obj, tol, max_iter);
    Ok(HomogeneousFit {
        status: if converged { FitStatus::Fitted } else { FitStatus::Budget },
        params: HomogeneousParams { b: x[0], beta: x[1] },
        residual,
        iterations,
        full_family_exists,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscentTrace {
    pub iterations: usize,
    pub final_max_abs: f64,
    pub exceeded: bool,
    pub log_likelihoods: Vec<f64>,
    /// Log-likelihood increase of every accepted step.
    pub gains: Vec<f64>,
}

/// Likelihood ascent without the existence gate, stopping once
/// `max |theta| > bound` or after `max_iter` accepted steps.
///
/// Damped Newton runs until it stops making progress in floating point.
/// The ascent then continues along integer directions on which every
/// feature vector of the support takes the same value; these leave the
/// distribution on the support unchanged, so the remaining gain comes from
/// the probability outside the support and is tracked in log space.
pub fn ascend_ungated(sample: &Sample, bound: f64, max_iter: usize) -> Result<AscentTrace> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    check_dim(sample.k, MAX_ISING_DIM)?;
    let masks = feature_masks(sample.k);
    let obj = Objective { k: sample.k, masks: &masks, target: sample.empirical_means(&masks) };
    let mut x = DVector::zeros(masks.len());
    let mut value = obj.value(&x);
    let mut trace = AscentTrace { iterations: 0, final_max_abs: 0.0, exceeded: false, log_likelihoods: vec![value], gains: vec![] };
    let done = |x: &DVector<f64>, t: &AscentTrace| t.iterations >= max_iter || x.amax() > bound;

    while !done(&x, &trace) {
        let (grad, cov, _) = obj.derivatives(&x);
        let dir = ascent_direction(&grad, &cov);
        if dir.amax() == 0.0 {
            break;
        }
        let dir = &dir / dir.amax();
        let Some((step, v)) = line_search(|s| obj.value(&(&x + &dir * s)), value, 40) else { break };
        x += &dir * step;
        trace.gains.push(v - value);
        value = v;
        trace.log_likelihoods.push(value);
        trace.iterations += 1;
    }

    let recession = RecessionProblem::new(sample, &masks, &x)?;
    if let Some(rp) = recession {
        let mut u = DVector::zeros(rp.basis.len());
        let mut d = rp.excess(&u);
        while !done(&(&x + rp.lift(&u)), &trace) {
            let (grad, cov) = rp.derivatives(&u);
            let dir = ascent_direction(&-grad, &cov);
            if dir.amax() == 0.0 {
                break;
            }
            let dir = &dir / dir.amax();
            let Some((step, nd)) = line_search(|s| -rp.excess(&(&u + &dir * s)), -d, 0) else { break };
            let nd = -nd;
            let gain = d.exp().ln_1p() - nd.exp().ln_1p();
            if !(gain > 0.0) {
                break;
            }
            u += &dir * step;
            d = nd;
            value += gain;
            trace.gains.push(gain);
            trace.log_likelihoods.push(value);
            trace.iterations += 1;
        }
        x += rp.lift(&u);
    }
    trace.final_max_abs = x.amax();
    trace.exceeded = x.amax() > bound;
    Ok(trace)
}

/// Largest improving step of the form `2^j`, `j <= max_doublings`, found by
/// halving from 1 until `f` improves on `current` and then doubling while it
/// keeps improving.
fn line_search(f: impl Fn(f64) -> f64, current: f64, max_doublings: usize) -> Option<(f64, f64)> {
    let mut step = 1.0;
    let mut best = f(step);
    while !(best > current) {
        step *= 0.5;
        if step < 1e-12 {
            return None;
        }
        best = f(step);
    }
    for _ in 0..max_doublings {
        let v = f(2.0 * step);
        if !(v > best) {
            break;
        }
        step *= 2.0;
        best = v;
    }
    Some((step, best))
}

/// Moves `theta + N u` where every column of `N` is an integer vector with
/// `N^T f(x)` the same for all `x` in the support.
struct RecessionProblem {
    basis: Vec<Vec<i64>>,
    /// `theta . f(x)` and `N^T f(x) - N^T f(x0)` for every state outside the support.
    outside: Vec<(f64, Vec<i64>)>,
    /// Log partition function restricted to the support.
    log_support: f64,
}

impl RecessionProblem {
    fn new(sample: &Sample, masks: &[u32], theta: &DVector<f64>) -> Result<Option<Self>> {
        use num_traits::ToPrimitive;
        let k = sample.k;
        let feature = |bits: u32| -> Vec<i64> { masks.iter().map(|&m| walsh_sign(m, bits) as i64).collect() };
        let support: Vec<u32> = sample.counts.keys().copied().collect();
        let base = feature(support[0]);
        let rows: Vec<Vec<crate::exact::Rational>> = support[1..]
            .iter()
            .map(|&b| feature(b).iter().zip(&base).map(|(a, c)| crate::exact::int(a - c)).collect())
            .collect();
        let basis: Vec<Vec<i64>> = if rows.is_empty() {
            (0..masks.len()).map(|i| (0..masks.len()).map(|j| i64::from(i == j)).collect()).collect()
        } else {
            crate::exact::kernel_basis(&rows)?
                .into_iter()
                .map(|v| v.iter().map(|r| r.to_integer().to_i64().expect("small kernel entries")).collect())
                .collect()
        };
        let outside_states: Vec<u32> = (0..=cube::full_mask(k)).filter(|b| !sample.counts.contains_key(b)).collect();
        if basis.is_empty() || outside_states.is_empty() {
            return Ok(None);
        }
        let project = |f: &[i64]| -> Vec<i64> { basis.iter().map(|n| n.iter().zip(f).map(|(a, b)| a * b).sum()).collect() };
        let c = project(&base);
        let energy = |f: &[i64]| -> f64 { f.iter().zip(theta.iter()).map(|(&a, &t)| a as f64 * t).sum() };
        let outside = outside_states
            .into_iter()
            .map(|b| {
                let f = feature(b);
                let g = project(&f).iter().zip(&c).map(|(a, b)| a - b).collect();
                (energy(&f), g)
            })
            .collect();
        let log_support = log_sum_exp(support.iter().map(|&b| energy(&feature(b))));
        Ok(Some(Self { basis, outside, log_support }))
    }

    fn shifted(&self, u: &DVector<f64>) -> impl Iterator<Item = f64> + '_ {
        let u = u.clone();
        self.outside.iter().map(move |(h, g)| h + g.iter().zip(u.iter()).map(|(&a, &b)| a as f64 * b).sum::<f64>())
    }

    /// `log P(outside) - log P(support)`.
    fn excess(&self, u: &DVector<f64>) -> f64 {
        log_sum_exp(self.shifted(u)) - self.log_support
    }

    /// Gradient and Hessian of [`Self::excess`] in `u`.
    fn derivatives(&self, u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.basis.len();
        let energies: Vec<f64> = self.shifted(u).collect();
        let z = log_sum_exp(energies.iter().copied());
        let mut mean = DVector::zeros(m);
        let mut second = DMatrix::zeros(m, m);
        for (e, (_, g)) in energies.iter().zip(&self.outside) {
            let r = (e - z).exp();
            let g = DVector::from_iterator(m, g.iter().map(|&a| a as f64));
            mean.axpy(r, &g, 1.0);
            second.ger(r, &g, &g, 1.0);
        }
        let cov = second - &mean * mean.transpose();
        (mean, cov)
    }

    fn lift(&self, u: &DVector<f64>) -> DVector<f64> {
        let d = self.basis[0].len();
        let mut out = DVector::zeros(d);
        for (n, &w) in self.basis.iter().zip(u.iter()) {
            for (o, &a) in out.iter_mut().zip(n) {
                *o += a as f64 * w;
            }
        }
        out
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for h in values {
        if h > max {
            acc = acc * (max - h).exp() + 1.0;
            max = h;
        } else {
            acc += (h - max).exp();
        }
    }
    max + acc.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub estimate: f64,
    pub half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Seed for replicate `rep` at sample size `n`.
pub fn replicate_seed(seed: u64, n: u64, rep: u64) -> u64 {
    let mut z = seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ rep.wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 95% Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Monte Carlo estimate of `P(support of an n-sample is a cone set of
/// uniqueness for B^k_q)` for each `n`, with 95% intervals.
pub fn prob_uniqueness_curve(
    k: u32,
    q: u32,
    p: &IsingParams,
    n_values: &[u64],
    reps: u64,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 replicates, got {reps}")));
    }
    if p.k != k {
        return Err(Error::DimensionMismatch { left: k, right: p.k });
    }
    cube::check_degree(k, q)?;
    check_dim(k, 6)?;
    let cdf = cumulative(p);
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if n == 0 {
            return Err(Error::InvalidArgument("sample sizes must be positive".into()));
        }
        let supports: Vec<u64> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, n, rep));
                (0..n).fold(0u64, |m, _| m | 1u64 << draw(&cdf, &mut rng))
            })
            .collect();
        let mut distinct = supports.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let verdicts: BTreeMap<u64, bool> = distinct
            .par_iter()
            .map(|&m| Ok((m, is_unique_cone(k, q, &cube::mask_to_vertices(k, m))?.is_unique())))
            .collect::<Result<_>>()?;
        let successes = supports.iter().filter(|m| verdicts[m]).count() as u64;
        let estimate = successes as f64 / reps as f64;
        let (ci_low, ci_high) = wilson_interval(successes, reps);
        out.push(CurvePoint { n, estimate, half_width: (ci_high - ci_low) / 2.0, ci_low, ci_high });
    }
    Ok(out)
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("n,estimate,ci_low,ci_high\n");
    for c in points {
        let _ = writeln!(out, "{},{:.6},{:.6},{:.6}", c.n, c.estimate, c.ci_low, c.ci_high);
    }
    out
}
