//! Martingale diagnostics, absorption classification, the exact one-step
//! enumeration oracle and the estimators built on top of them.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{ActionVector, Draw, Dynamics, DynamicsSpec, Interaction, InteractionScheme, Rule};
use crate::error::{Error, Result};
use crate::graph::{self, lazy_of, Alpha, StationaryDistribution, WeightedGraph};

/// Largest network [`enumerate_next_state`] accepts.
pub const MAX_ENUMERATION_AGENTS: usize = 12;
/// Largest number of weights enumerated for edge-sampling support.
pub const MAX_ENUMERATION_EDGES: usize = 16;
/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// `q = πᵀx`, the weighted network belief.
pub fn weighted_average(pi: &[f64], x: &[f64]) -> Result<f64> {
    if pi.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: pi.len(), found: x.len() });
    }
    if let Some(&first) = x.first() {
        if x.iter().all(|&v| v == first) {
            return Ok(first);
        }
    }
    Ok(pi.iter().zip(x).map(|(p, v)| p * v).sum::<f64>().clamp(0.0, 1.0))
}

/// `Var(Δq | x) = Σ α_n² π_n² x_n (1 − x_n)` under the consensus rule, with
/// `π` the left eigenvector of the lazy operator.
pub fn delta_q_conditional_variance(pi: &[f64], x: &[f64], alpha: &Alpha) -> f64 {
    pi.iter()
        .zip(x)
        .enumerate()
        .map(|(n, (p, v))| {
            let a = alpha.at(n);
            a * a * p * p * v * (1.0 - v)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbsorptionClass {
    Herd0,
    Herd1,
    Polarized,
    Unresolved,
}

impl AbsorptionClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AbsorptionClass::Herd0 => "herd0",
            AbsorptionClass::Herd1 => "herd1",
            AbsorptionClass::Polarized => "polarized",
            AbsorptionClass::Unresolved => "unresolved",
        }
    }

    pub fn is_resolved(self) -> bool {
        self != AbsorptionClass::Unresolved
    }
}

impl fmt::Display for AbsorptionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AbsorptionClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "herd0" => Self::Herd0,
            "herd1" => Self::Herd1,
            "polarized" => Self::Polarized,
            "unresolved" => Self::Unresolved,
            _ => {
                return Err(Error::InvalidParameter { name: "class", reason: format!("unknown class `{s}`") })
            }
        })
    }
}

/// Herd0 when every belief is below `ε`, Herd1 when every belief is above
/// `1 − ε`, Polarized when every belief is within `ε` of a boundary and both
/// boundaries occur.
pub fn classify(x: &[f64], epsilon: f64) -> AbsorptionClass {
    let mut low = false;
    let mut high = false;
    for &v in x {
        if v < epsilon {
            low = true;
        } else if v > 1.0 - epsilon {
            high = true;
        } else {
            return AbsorptionClass::Unresolved;
        }
    }
    match (low, high) {
        (true, true) => AbsorptionClass::Polarized,
        (false, true) => AbsorptionClass::Herd1,
        _ => AbsorptionClass::Herd0,
    }
}

/// Exact finite law of `x(t+1)` given `x(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NextStateDistribution {
    pub outcomes: Vec<(Vec<f64>, f64)>,
}

impl NextStateDistribution {
    fn collect(entries: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Self {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut outcomes: Vec<(Vec<f64>, f64)> = Vec::new();
        for (x, p) in entries {
            if p <= 0.0 {
                continue;
            }
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            match index.get(&key) {
                Some(&i) => outcomes[i].1 += p,
                None => {
                    index.insert(key, outcomes.len());
                    outcomes.push((x, p));
                }
            }
        }
        Self { outcomes }
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.outcomes.first().map_or(0, |(x, _)| x.len());
        let mut m = vec![0.0; n];
        for (x, p) in &self.outcomes {
            for (acc, v) in m.iter_mut().zip(x) {
                *acc += p * v;
            }
        }
        m
    }

    /// Mean and variance of `πᵀx(t+1)`.
    pub fn weighted_moments(&self, pi: &[f64]) -> (f64, f64) {
        let q = |x: &[f64]| pi.iter().zip(x).map(|(p, v)| p * v).sum::<f64>();
        let mean: f64 = self.outcomes.iter().map(|(x, p)| p * q(x)).sum();
        let var = self.outcomes.iter().map(|(x, p)| p * (q(x) - mean).powi(2)).sum();
        (mean, var)
    }

    pub fn probability_of(&self, x: &[f64]) -> f64 {
        self.outcomes
            .iter()
            .find(|(y, _)| y.iter().zip(x).all(|(a, b)| a.to_bits() == b.to_bits()))
            .map_or(0.0, |(_, p)| *p)
    }
}

fn action_probability(x: &[f64], a: &[bool]) -> f64 {
    x.iter().zip(a).map(|(&p, &on)| if on { p } else { 1.0 - p }).product()
}

/// Every draw of one step with its probability.
pub fn draw_support(dynamics: &Dynamics<'_>, x: &[f64]) -> Result<Vec<(Draw, f64)>> {
    let n = dynamics.n();
    if n > MAX_ENUMERATION_AGENTS {
        return Err(Error::TooLarge { what: format!("{n} agents (limit {MAX_ENUMERATION_AGENTS})") });
    }
    let mut support = Vec::new();
    match dynamics.spec().rule {
        Rule::Reinforcement { .. } => {
            for ((a, b), p_pair) in dynamics.pair_distribution() {
                for (a_n, a_k) in [(false, false), (false, true), (true, false), (true, true)] {
                    let p = p_pair
                        * if a_n { x[a] } else { 1.0 - x[a] }
                        * if a_k { x[b] } else { 1.0 - x[b] };
                    support.push((Draw::Pairwise { n: a, k: b, a_n, a_k }, p));
                }
            }
        }
        _ => {
            let interactions: Vec<(Option<Interaction>, f64)> = match dynamics.spec().rule {
                Rule::RandomInteractions { .. } => dynamics
                    .interaction_support(MAX_ENUMERATION_EDGES)?
                    .into_iter()
                    .map(|(i, p)| (Some(i), p))
                    .collect(),
                _ => vec![(None, 1.0)],
            };
            for bits in 0u64..(1 << n) {
                let actions = ActionVector::from_bits(n, bits);
                let pa = action_probability(x, &actions);
                if pa == 0.0 {
                    continue;
                }
                for (interaction, pi) in &interactions {
                    support.push((Draw::Synchronous { interaction: interaction.clone(), actions: actions.clone() }, pa * pi));
                }
            }
        }
    }
    Ok(support)
}

/// Brute-force law of the next state: every action vector (and pair or
/// interaction pattern) pushed through the transition and merged.
pub fn enumerate_next_state(x: &[f64], spec: &DynamicsSpec, g: &WeightedGraph) -> Result<NextStateDistribution> {
    if x.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: x.len() });
    }
    let dynamics = Dynamics::new(g, spec.clone())?;
    let support = draw_support(&dynamics, x)?;
    Ok(NextStateDistribution::collect(support.into_iter().map(|(d, p)| (dynamics.apply_draw(x, &d), p))))
}

/// Reinforcement law of `x(t+1)` once the pair `(n, k)` is fixed.
pub fn enumerate_reinforcement_pair(x: &[f64], pair: (usize, usize), alpha: &Alpha) -> NextStateDistribution {
    let (n, k) = pair;
    NextStateDistribution::collect([(false, false), (false, true), (true, false), (true, true)].map(|(a_n, a_k)| {
        let p = if a_n { x[n] } else { 1.0 - x[n] } * if a_k { x[k] } else { 1.0 - x[k] };
        (crate::dynamics::step_reinforcement(x, pair, a_n, a_k, alpha).into_vec(), p)
    }))
}

/// `E[x_n(t+1) | x(t), (n, k)] = x_n + α x_n (1 − x_n)(2 x_k − 1)`.
pub fn reinforcement_pair_expectation(x: &[f64], pair: (usize, usize), alpha: f64) -> f64 {
    let (n, k) = pair;
    x[n] + alpha * x[n] * (1.0 - x[n]) * (2.0 * x[k] - 1.0)
}

/// Expected next state under bounded confidence, agent by agent:
/// `x_n + α E[(s_n − x_n) 1{|s_n − x_n| ≤ τ}]`, enumerating only agent `n`'s
/// neighborhood.
pub fn bounded_confidence_expectation(x: &[f64], g: &WeightedGraph, alpha: &Alpha, tau: f64) -> Result<Vec<f64>> {
    (0..g.n())
        .map(|n| {
            let row: Vec<(usize, f64)> = g.row(n).collect();
            if row.len() > crate::dynamics::MAX_GATE_NEIGHBORS {
                return Err(Error::NeighborhoodTooLarge {
                    agent: n,
                    degree: row.len(),
                    max: crate::dynamics::MAX_GATE_NEIGHBORS,
                });
            }
            let mut drift = 0.0;
            for bits in 0u64..(1 << row.len()) {
                let mut p = 1.0;
                let mut s = 0.0;
                for (i, &(c, w)) in row.iter().enumerate() {
                    let on = bits >> i & 1 == 1;
                    p *= if on { x[c] } else { 1.0 - x[c] };
                    if on {
                        s += w;
                    }
                }
                let z = s - x[n];
                if z.abs() <= tau {
                    drift += p * z;
                }
            }
            Ok(x[n] + alpha.at(n) * drift)
        })
        .collect()
}

/// The matrix `M` with `E[x(t+1) | x(t)] = M x(t)` for the rules that are
/// linear in expectation (consensus and random interactions).
pub fn expected_operator(g: &WeightedGraph, spec: &DynamicsSpec) -> Result<WeightedGraph> {
    spec.validate(g.n())?;
    let alpha = &spec.alpha;
    match spec.rule {
        Rule::Consensus => Ok(lazy_of(g, |n| alpha.at(n))),
        Rule::RandomInteractions { scheme: InteractionScheme::PairwiseGossip, .. } => {
            let pairs = g.undirected_pairs();
            if pairs.is_empty() {
                return Err(Error::NoEdges);
            }
            let p = 1.0 / pairs.len() as f64;
            let n = g.n();
            let mut m = vec![vec![0.0; n]; n];
            for &(a, b) in &pairs {
                for r in 0..n {
                    let al = alpha.at(r);
                    if r == a || r == b {
                        m[r][r] += p * (1.0 - al / 2.0);
                        m[r][a + b - r] += p * al / 2.0;
                    } else {
                        // frozen or pulled towards a_r, a bystander keeps x_r in mean
                        m[r][r] += p;
                    }
                }
            }
            WeightedGraph::from_rows(&m)
        }
        Rule::RandomInteractions { scheme: InteractionScheme::EdgeSampling { keep }, .. } => {
            let n = g.n();
            let mut m = vec![vec![0.0; n]; n];
            for r in 0..n {
                let row: Vec<(usize, f64)> = g.row(r).collect();
                let d = row.len();
                if d > MAX_ENUMERATION_EDGES {
                    return Err(Error::TooLarge { what: format!("row {r} with {d} entries") });
                }
                let al = alpha.at(r);
                for bits in 0u64..(1 << d) {
                    let kept = bits.count_ones() as i32;
                    let p = keep.powi(kept) * (1.0 - keep).powi(d as i32 - kept);
                    if p == 0.0 {
                        continue;
                    }
                    if kept == 0 {
                        m[r][r] += p;
                        continue;
                    }
                    let total: f64 = (0..d).filter(|i| bits >> i & 1 == 1).map(|i| row[i].1).sum();
                    m[r][r] += p * (1.0 - al);
                    for (i, &(c, w)) in row.iter().enumerate() {
                        if bits >> i & 1 == 1 {
                            m[r][c] += p * al * w / total;
                        }
                    }
                }
            }
            WeightedGraph::from_rows(&m)
        }
        _ => Err(Error::InvalidParameter {
            name: "rule",
            reason: "bounded confidence and reinforcement are not linear in expectation".into(),
        }),
    }
}

/// Weights `π` making `q = πᵀx` a martingale: the stationary distribution of
/// the expected one-step operator. Rules without a linear mean fall back to
/// the stationary distribution of `W`.
pub fn martingale_weights(g: &WeightedGraph, spec: &DynamicsSpec) -> Result<StationaryDistribution> {
    const TOL: f64 = 1e-14;
    const MAX_ITER: usize = 1_000_000;
    match (&spec.rule, &spec.alpha) {
        (Rule::Consensus, Alpha::Uniform(_)) => graph::stationary_distribution(g, TOL, MAX_ITER),
        (Rule::Consensus, _) | (Rule::RandomInteractions { .. }, _) => {
            graph::stationary_distribution(&expected_operator(g, spec)?, TOL, MAX_ITER)
        }
        _ => graph::stationary_distribution(g, TOL, MAX_ITER),
    }
}

/// `q(t)`, its increments and the analytic conditional variance of each
/// increment along one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleDiagnostics {
    pub q_trajectory: Vec<f64>,
    pub drift_estimates: Vec<f64>,
    pub conditional_variances: Vec<f64>,
}

pub fn trace_martingale<R: Rng + ?Sized>(
    dynamics: &Dynamics<'_>,
    pi: &[f64],
    x0: &[f64],
    steps: usize,
    rng: &mut R,
) -> Result<MartingaleDiagnostics> {
    let mut x = x0.to_vec();
    let mut scratch = dynamics.scratch();
    let alpha = &dynamics.spec().alpha;
    let mut q_trajectory = vec![weighted_average(pi, &x)?];
    let mut drift_estimates = Vec::with_capacity(steps);
    let mut conditional_variances = Vec::with_capacity(steps);
    for _ in 0..steps {
        conditional_variances.push(delta_q_conditional_variance(pi, &x, alpha));
        dynamics.step_in_place(&mut x, &mut scratch, rng);
        let q = weighted_average(pi, &x)?;
        drift_estimates.push(q - q_trajectory[q_trajectory.len() - 1]);
        q_trajectory.push(q);
    }
    Ok(MartingaleDiagnostics { q_trajectory, drift_estimates, conditional_variances })
}

/// Sampled one-step statistics of `Δq` at a fixed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub q: f64,
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub variance: f64,
}

impl DriftEstimate {
    /// `|mean − expected| / SE`; zero when both the error and the deviation
    /// vanish.
    pub fn z_score(&self, expected: f64) -> f64 {
        let dev = (self.mean - expected).abs();
        if self.std_error == 0.0 {
            if dev == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            dev / self.std_error
        }
    }
}

pub fn estimate_drift<R: Rng + ?Sized>(
    dynamics: &Dynamics<'_>,
    pi: &[f64],
    x: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<DriftEstimate> {
    let q = weighted_average(pi, x)?;
    let mut scratch = dynamics.scratch();
    let mut state = x.to_vec();
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..samples {
        state.copy_from_slice(x);
        dynamics.step_in_place(&mut state, &mut scratch, rng);
        let dq = pi.iter().zip(&state).map(|(p, v)| p * v).sum::<f64>() - q;
        let delta = dq - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (dq - mean);
    }
    let variance = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    Ok(DriftEstimate { q, samples, mean, std_error: (variance / samples as f64).sqrt(), variance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Sampled outcomes outside the enumerated support.
    pub unexpected: u64,
}

/// Pearson goodness of fit. Bins with expected count below 5 are pooled.
pub fn chi_square(observed: &[u64], probabilities: &[f64]) -> ChiSquareResult {
    let total: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = p * total as f64;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = bins.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).map(|d| d.sf(statistic)).unwrap_or(0.0)
    };
    ChiSquareResult { statistic, degrees_of_freedom: df, p_value, unexpected: 0 }
}

/// Samples `samples` one-step transitions from `x` and tests them against
/// the enumerated law.
pub fn oracle_equivalence<R: Rng + ?Sized>(
    dynamics: &Dynamics<'_>,
    x: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<ChiSquareResult> {
    let dist = NextStateDistribution::collect(
        draw_support(dynamics, x)?.into_iter().map(|(d, p)| (dynamics.apply_draw(x, &d), p)),
    );
    let index: HashMap<Vec<u64>, usize> = dist
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, (y, _))| (y.iter().map(|v| v.to_bits()).collect(), i))
        .collect();
    let mut counts = vec![0u64; dist.outcomes.len()];
    let mut unexpected = 0;
    let mut scratch = dynamics.scratch();
    let mut state = x.to_vec();
    let mut key = vec![0u64; x.len()];
    for _ in 0..samples {
        state.copy_from_slice(x);
        dynamics.step_in_place(&mut state, &mut scratch, rng);
        for (k, v) in key.iter_mut().zip(&state) {
            *k = v.to_bits();
        }
        match index.get(&key) {
            Some(&i) => counts[i] += 1,
            None => unexpected += 1,
        }
    }
    let probs: Vec<f64> = dist.outcomes.iter().map(|(_, p)| *p).collect();
    let mut result = chi_square(&counts, &probs);
    result.unexpected = unexpected;
    if unexpected > 0 {
        result.p_value = 0.0;
    }
    Ok(result)
}

/// Herd-to-1 frequency among resolved trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerdEstimate {
    pub p_hat: f64,
    /// Wilson 99% interval half-width.
    pub ci_halfwidth: f64,
    pub herd0: usize,
    pub herd1: usize,
    pub polarized: usize,
    pub unresolved: usize,
}

impl HerdEstimate {
    pub fn resolved(&self) -> usize {
        self.herd0 + self.herd1 + self.polarized
    }
}

pub fn herd_probability_estimate(outcomes: &[AbsorptionClass]) -> Result<HerdEstimate> {
    let count = |c| outcomes.iter().filter(|&&o| o == c).count();
    let herd0 = count(AbsorptionClass::Herd0);
    let herd1 = count(AbsorptionClass::Herd1);
    let polarized = count(AbsorptionClass::Polarized);
    let unresolved = count(AbsorptionClass::Unresolved);
    let resolved = herd0 + herd1 + polarized;
    if resolved == 0 {
        return Err(Error::NoResolvedTrials);
    }
    let p_hat = herd1 as f64 / resolved as f64;
    Ok(HerdEstimate { p_hat, ci_halfwidth: wilson_halfwidth(p_hat, resolved, Z_99), herd0, herd1, polarized, unresolved })
}

pub fn wilson_halfwidth(p_hat: f64, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Envelope and trailing-window spread of one agent's belief.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentFluctuation {
    pub min: f64,
    pub max: f64,
    /// Population standard deviation of each full trailing window, one per
    /// window end position.
    pub rolling_std: Vec<f64>,
}

impl AgentFluctuation {
    pub fn min_rolling_std(&self) -> f64 {
        self.rolling_std.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn fluctuation_monitor(trajectory: &[Vec<f64>], window: usize) -> Result<Vec<AgentFluctuation>> {
    if window == 0 || trajectory.len() < window {
        return Err(Error::TooShort { len: trajectory.len(), window });
    }
    let n = trajectory[0].len();
    Ok((0..n)
        .map(|agent| {
            let series: Vec<f64> = trajectory.iter().map(|x| x[agent]).collect();
            let min = series.iter().copied().fold(f64::INFINITY, f64::min);
            let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            AgentFluctuation { min, max, rolling_std: rolling_std(&series, window) }
        })
        .collect())
}

fn rolling_std(series: &[f64], window: usize) -> Vec<f64> {
    let w = window as f64;
    let mut out = Vec::with_capacity(series.len() + 1 - window);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (i, &v) in series.iter().enumerate() {
        // exact recomputation once per window bounds accumulated drift
        if i >= window && (i - window).is_multiple_of(window) {
            let span = &series[i + 1 - window..i];
            sum = span.iter().sum();
            sum_sq = span.iter().map(|x| x * x).sum();
        } else if i >= window {
            let old = series[i - window];
            sum -= old;
            sum_sq -= old * old;
        }
        sum += v;
        sum_sq += v * v;
        if i + 1 >= window {
            let mean = sum / w;
            out.push((sum_sq / w - mean * mean).max(0.0).sqrt());
        }
    }
    out
}
