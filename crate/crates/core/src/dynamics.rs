//! Action sampling and the four belief-update rules.
//!
//! Agents never see each other's beliefs. At each step every agent draws a
//! binary action with probability equal to its belief, and beliefs move
//! towards the (weighted) actions they observe. The free functions here are
//! the pure transition rules; [`Dynamics`] binds a rule to a graph and runs
//! it over reusable buffers.

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Alpha, WeightedGraph};

/// Largest neighborhood [`bc_gate_probability`] enumerates.
pub const MAX_GATE_NEIGHBORS: usize = 20;

/// Probabilities `x_n(t)` of taking action 1, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some((agent, &value)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::BeliefOutOfRange { agent, value });
        }
        Ok(Self(x))
    }

    pub fn constant(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for BeliefVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for BeliefVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BeliefVector> for Vec<f64> {
    fn from(b: BeliefVector) -> Self {
        b.0
    }
}

/// One binary action per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionVector(Vec<bool>);

impl ActionVector {
    pub fn new(a: Vec<bool>) -> Self {
        Self(a)
    }

    /// Agent `n` takes action `(bits >> n) & 1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self((0..n).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl Deref for ActionVector {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InteractionScheme {
    /// One edge per step; its two endpoints average their actions.
    PairwiseGossip,
    /// Every nonzero weight survives independently with probability `keep`.
    EdgeSampling { keep: f64 },
}

/// How the observed neighbor is picked in the reinforcement rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSelection {
    /// Proportional to the off-diagonal weights of the chosen agent's row.
    #[default]
    Weighted,
    /// Uniform over the chosen agent's off-diagonal neighbors.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    Consensus,
    RandomInteractions {
        scheme: InteractionScheme,
        /// Agents outside the sampled interaction keep their belief.
        frozen_bystanders: bool,
    },
    BoundedConfidence {
        tau: f64,
    },
    Reinforcement {
        pair_selection: PairSelection,
    },
}

impl Rule {
    /// Whether a split of agents at 0 and 1 persists. Averaging rules pull
    /// the two camps together; reinforcement freezes boundary agents and the
    /// confidence gate (τ < 1) keeps the camps from seeing each other.
    pub fn holds_polarization(&self) -> bool {
        matches!(self, Rule::BoundedConfidence { .. } | Rule::Reinforcement { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    pub rule: Rule,
    pub alpha: Alpha,
}

impl DynamicsSpec {
    pub fn new(rule: Rule, alpha: impl Into<Alpha>) -> Self {
        Self { rule, alpha: alpha.into() }
    }

    pub fn consensus(alpha: f64) -> Self {
        Self::new(Rule::Consensus, alpha)
    }

    pub fn pairwise_gossip(alpha: f64) -> Self {
        Self::new(
            Rule::RandomInteractions { scheme: InteractionScheme::PairwiseGossip, frozen_bystanders: true },
            alpha,
        )
    }

    pub fn bounded_confidence(alpha: f64, tau: f64) -> Self {
        Self::new(Rule::BoundedConfidence { tau }, alpha)
    }

    pub fn reinforcement(alpha: f64) -> Self {
        Self::new(Rule::Reinforcement { pair_selection: PairSelection::Weighted }, alpha)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.alpha.validate(n)?;
        match self.rule {
            Rule::BoundedConfidence { tau } if !(tau > 0.0 && tau < 1.0) => Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("confidence threshold must lie in (0, 1), got {tau}"),
            }),
            Rule::RandomInteractions { scheme: InteractionScheme::EdgeSampling { keep }, .. }
                if !(keep > 0.0 && keep <= 1.0) =>
            {
                Err(Error::InvalidParameter {
                    name: "keep_probability",
                    reason: format!("must lie in (0, 1], got {keep}"),
                })
            }
            _ => Ok(()),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Independent Bernoulli draws, `P(a_n = 1) = x_n`, one uniform per agent in
/// agent order.
pub fn sample_actions<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> ActionVector {
    let mut a = vec![false; x.len()];
    fill_actions(x, rng, &mut a);
    ActionVector(a)
}

#[inline]
pub(crate) fn fill_actions<R: Rng + ?Sized>(x: &[f64], rng: &mut R, out: &mut [bool]) {
    for (a, &p) in out.iter_mut().zip(x) {
        *a = rng.random::<f64>() < p;
    }
}

/// `Σ_k w_k a_k`, exact at the unanimous ends so that all-ones maps to 1.0
/// even when the weights do not sum to exactly 1.0 in floating point.
#[inline]
fn action_mean(cols: &[usize], weights: &[f64], a: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut ones = 0;
    for (&c, &w) in cols.iter().zip(weights) {
        if a[c] {
            sum += w;
            ones += 1;
        }
    }
    if ones == cols.len() {
        1.0
    } else if ones == 0 {
        0.0
    } else {
        sum.min(1.0)
    }
}

/// Kept subset of a row, renormalized.
#[inline]
fn kept_action_mean(cols: &[usize], weights: &[f64], kept: &[bool], a: &[bool]) -> Option<f64> {
    let mut total = 0.0;
    let mut sum = 0.0;
    let mut count = 0;
    let mut ones = 0;
    for ((&c, &w), &k) in cols.iter().zip(weights).zip(kept) {
        if k {
            total += w;
            count += 1;
            if a[c] {
                sum += w;
                ones += 1;
            }
        }
    }
    if count == 0 {
        None
    } else if count == cols.len() {
        Some(action_mean(cols, weights, a))
    } else if ones == count {
        Some(1.0)
    } else if ones == 0 {
        Some(0.0)
    } else {
        Some((sum / total).min(1.0))
    }
}

#[inline]
fn toward(x: f64, alpha: f64, target: f64) -> f64 {
    (x + alpha * (target - x)).clamp(0.0, 1.0)
}

/// `x'_n = (1 − α_n) x_n + α_n Σ_k w_nk a_k`.
pub fn step_consensus(x: &[f64], a: &[bool], g: &WeightedGraph, alpha: &Alpha) -> Result<BeliefVector> {
    check_len(g.n(), x.len())?;
    check_len(g.n(), a.len())?;
    Ok(BeliefVector(
        (0..g.n())
            .map(|n| toward(x[n], alpha.at(n), action_mean(g.row_cols(n), g.row_weights(n), a)))
            .collect(),
    ))
}

/// Same update as [`step_consensus`] against a sampled one-step matrix `W(t)`.
pub fn step_random_interactions(
    x: &[f64],
    a: &[bool],
    w_t: &WeightedGraph,
    alpha: &Alpha,
) -> Result<BeliefVector> {
    step_consensus(x, a, w_t, alpha)
}

/// `ρ(z) = α z` when `|z| ≤ τ`, zero otherwise.
#[inline]
pub fn rho(z: f64, alpha: f64, tau: f64) -> f64 {
    if z.abs() <= tau {
        alpha * z
    } else {
        0.0
    }
}

#[inline]
fn bounded_update(x: f64, alpha: f64, tau: f64, observed: f64) -> f64 {
    (x + rho(observed - x, alpha, tau)).clamp(0.0, 1.0)
}

/// `x'_n = x_n + ρ(Σ_k w_nk a_k − x_n)`.
pub fn step_bounded_confidence(
    x: &[f64],
    a: &[bool],
    g: &WeightedGraph,
    alpha: &Alpha,
    tau: f64,
) -> Result<BeliefVector> {
    check_len(g.n(), x.len())?;
    check_len(g.n(), a.len())?;
    Ok(BeliefVector(
        (0..g.n())
            .map(|n| bounded_update(x[n], alpha.at(n), tau, action_mean(g.row_cols(n), g.row_weights(n), a)))
            .collect(),
    ))
}

/// Exact probability that agent `n`'s gate is closed,
/// `P(|Σ_k w_nk a_k − x_n| > τ | x)`, by enumerating its neighbors' actions.
pub fn bc_gate_probability(x: &[f64], g: &WeightedGraph, tau: f64, n: usize) -> Result<f64> {
    check_len(g.n(), x.len())?;
    if n >= g.n() {
        return Err(Error::IndexOutOfRange { index: n, n: g.n() });
    }
    let cols = g.row_cols(n);
    let weights = g.row_weights(n);
    let deg = cols.len();
    if deg > MAX_GATE_NEIGHBORS {
        return Err(Error::NeighborhoodTooLarge { agent: n, degree: deg, max: MAX_GATE_NEIGHBORS });
    }
    let mut a = vec![false; g.n()];
    let mut closed = 0.0;
    for bits in 0u64..(1 << deg) {
        let mut p = 1.0;
        for (i, &c) in cols.iter().enumerate() {
            let on = bits >> i & 1 == 1;
            a[c] = on;
            p *= if on { x[c] } else { 1.0 - x[c] };
        }
        if p > 0.0 && (action_mean(cols, weights, &a) - x[n]).abs() > tau {
            closed += p;
        }
    }
    Ok(closed)
}

/// Draws one interaction pattern and returns the one-step matrix `W(t)`.
pub fn sample_interaction_matrix<R: Rng + ?Sized>(
    g: &WeightedGraph,
    scheme: InteractionScheme,
    rng: &mut R,
) -> Result<WeightedGraph> {
    let pairs = g.undirected_pairs();
    let interaction = draw_interaction(g, scheme, &pairs, rng)?;
    Ok(interaction_matrix(g, &interaction))
}

/// One realization of the random interaction pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Interaction {
    /// Agents `n < k` average their two actions; everyone else sees only
    /// their own.
    Pair(usize, usize),
    /// Surviving entries, indexed like [`WeightedGraph::entries`].
    Kept(Vec<bool>),
}

fn draw_interaction<R: Rng + ?Sized>(
    g: &WeightedGraph,
    scheme: InteractionScheme,
    pairs: &[(usize, usize)],
    rng: &mut R,
) -> Result<Interaction> {
    match scheme {
        InteractionScheme::PairwiseGossip => {
            if pairs.is_empty() {
                return Err(Error::NoEdges);
            }
            let (n, k) = pairs[rng.random_range(0..pairs.len())];
            Ok(Interaction::Pair(n, k))
        }
        InteractionScheme::EdgeSampling { keep } => {
            Ok(Interaction::Kept((0..g.nnz()).map(|_| rng.random::<f64>() < keep).collect()))
        }
    }
}

/// The row-stochastic matrix an interaction realizes.
pub fn interaction_matrix(g: &WeightedGraph, interaction: &Interaction) -> WeightedGraph {
    let n = g.n();
    let mut edges = Vec::new();
    match interaction {
        Interaction::Pair(a, b) => {
            for m in 0..n {
                if m == *a || m == *b {
                    edges.push((m, *a, 0.5));
                    edges.push((m, *b, 0.5));
                } else {
                    edges.push((m, m, 1.0));
                }
            }
        }
        Interaction::Kept(mask) => {
            let mut offset = 0;
            for r in 0..n {
                let row: Vec<(usize, f64)> = g
                    .row(r)
                    .zip(&mask[offset..offset + g.degree(r)])
                    .filter(|(_, &k)| k)
                    .map(|(e, _)| e)
                    .collect();
                if row.is_empty() {
                    edges.push((r, r, 1.0));
                } else {
                    edges.extend(row.into_iter().map(|(c, w)| (r, c, w)));
                }
                offset += g.degree(r);
            }
        }
    }
    WeightedGraph::from_edges(n, &edges).expect("interaction rows are never empty")
}

/// Picks an agent uniformly, then one of its neighbors in proportion to the
/// off-diagonal weights of its row.
pub fn sample_pair<R: Rng + ?Sized>(g: &WeightedGraph, rng: &mut R) -> (usize, usize) {
    PairTable::new(g, PairSelection::Weighted).sample(rng)
}

/// `x'_n = x_n + α δ[a_n − a_k] (a_n − x_n)`; only agent `n` moves.
pub fn step_reinforcement(x: &[f64], pair: (usize, usize), a_n: bool, a_k: bool, alpha: &Alpha) -> BeliefVector {
    let mut out = x.to_vec();
    let (n, _) = pair;
    out[n] = reinforce(x[n], alpha.at(n), a_n, a_k);
    BeliefVector(out)
}

#[inline]
fn reinforce(x: f64, alpha: f64, a_n: bool, a_k: bool) -> f64 {
    if a_n == a_k {
        toward(x, alpha, if a_n { 1.0 } else { 0.0 })
    } else {
        x
    }
}

/// Off-diagonal neighbor lists with cumulative selection weights.
#[derive(Debug, Clone)]
pub(crate) struct PairTable {
    neighbors: Vec<Vec<usize>>,
    cumulative: Vec<Vec<f64>>,
}

impl PairTable {
    pub(crate) fn new(g: &WeightedGraph, selection: PairSelection) -> Self {
        let mut neighbors = Vec::with_capacity(g.n());
        let mut cumulative = Vec::with_capacity(g.n());
        for r in 0..g.n() {
            let mut nb = Vec::new();
            let mut cum = Vec::new();
            let mut acc = 0.0;
            for (c, w) in g.row(r).filter(|&(c, _)| c != r) {
                acc += match selection {
                    PairSelection::Weighted => w,
                    PairSelection::Uniform => 1.0,
                };
                nb.push(c);
                cum.push(acc);
            }
            neighbors.push(nb);
            cumulative.push(cum);
        }
        Self { neighbors, cumulative }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let n = rng.random_range(0..self.neighbors.len());
        let cum = &self.cumulative[n];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        (n, self.neighbors[n][i])
    }

    /// Exact `(pair, probability)` list.
    pub(crate) fn distribution(&self) -> Vec<((usize, usize), f64)> {
        let agents = self.neighbors.len() as f64;
        let mut out = Vec::new();
        for (n, (nb, cum)) in self.neighbors.iter().zip(&self.cumulative).enumerate() {
            let total = cum[cum.len() - 1];
            let mut prev = 0.0;
            for (&k, &c) in nb.iter().zip(cum) {
                out.push(((n, k), (c - prev) / total / agents));
                prev = c;
            }
        }
        out
    }
}

/// The randomness consumed by one step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Draw {
    Synchronous { interaction: Option<Interaction>, actions: ActionVector },
    Pairwise { n: usize, k: usize, a_n: bool, a_k: bool },
}

/// A rule bound to a graph, ready to step.
#[derive(Debug, Clone)]
pub struct Dynamics<'g> {
    graph: &'g WeightedGraph,
    spec: DynamicsSpec,
    pairs: Vec<(usize, usize)>,
    pair_table: Option<PairTable>,
}

/// Reusable buffers for [`Dynamics::step_in_place`].
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    actions: Vec<bool>,
    kept: Vec<bool>,
    next: Vec<f64>,
}

impl<'g> Dynamics<'g> {
    pub fn new(graph: &'g WeightedGraph, spec: DynamicsSpec) -> Result<Self> {
        spec.validate(graph.n())?;
        let pairs = graph.undirected_pairs();
        let pair_table = match spec.rule {
            Rule::Reinforcement { pair_selection } => {
                if let Some(row) = (0..graph.n()).find(|&r| graph.row_cols(r).iter().all(|&c| c == r)) {
                    return Err(Error::InvalidParameter {
                        name: "graph",
                        reason: format!("agent {row} has no neighbor to observe"),
                    });
                }
                Some(PairTable::new(graph, pair_selection))
            }
            Rule::RandomInteractions { scheme: InteractionScheme::PairwiseGossip, .. } if pairs.is_empty() => {
                return Err(Error::NoEdges)
            }
            _ => None,
        };
        Ok(Self { graph, spec, pairs, pair_table })
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }

    pub fn spec(&self) -> &DynamicsSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Whether a step updates a single agent.
    pub fn is_pairwise(&self) -> bool {
        matches!(self.spec.rule, Rule::Reinforcement { .. })
    }

    pub fn scratch(&self) -> Scratch {
        Scratch { actions: vec![false; self.n()], kept: vec![false; self.graph.nnz()], next: vec![0.0; self.n()] }
    }

    /// Draws the randomness for one step from `x`. Consumes the stream exactly
    /// as [`Dynamics::step_in_place`] does.
    pub fn sample_draw<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Draw {
        match &self.spec.rule {
            Rule::Reinforcement { .. } => {
                let (n, k) = self.pair_table.as_ref().unwrap().sample(rng);
                let a_n = rng.random::<f64>() < x[n];
                let a_k = rng.random::<f64>() < x[k];
                Draw::Pairwise { n, k, a_n, a_k }
            }
            Rule::RandomInteractions { scheme, .. } => {
                let interaction = draw_interaction(self.graph, *scheme, &self.pairs, rng).unwrap();
                Draw::Synchronous { interaction: Some(interaction), actions: sample_actions(x, rng) }
            }
            _ => Draw::Synchronous { interaction: None, actions: sample_actions(x, rng) },
        }
    }

    /// Deterministic transition: the state after `draw` is applied to `x`.
    pub fn apply_draw(&self, x: &[f64], draw: &Draw) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        match draw {
            Draw::Pairwise { n, k: _, a_n, a_k } => {
                out.copy_from_slice(x);
                out[*n] = reinforce(x[*n], self.spec.alpha.at(*n), *a_n, *a_k);
            }
            Draw::Synchronous { interaction, actions } => {
                let kept = match interaction {
                    Some(Interaction::Kept(mask)) => mask.as_slice(),
                    _ => &[],
                };
                let pair = match interaction {
                    Some(Interaction::Pair(a, b)) => Some((*a, *b)),
                    _ => None,
                };
                self.synchronous_update(x, actions, pair, kept, &mut out);
            }
        }
        out
    }

    /// Advances `x` one step. Returns the agent that moved for pairwise rules.
    pub fn step_in_place<R: Rng + ?Sized>(&self, x: &mut Vec<f64>, scratch: &mut Scratch, rng: &mut R) -> Option<usize> {
        match &self.spec.rule {
            Rule::Reinforcement { .. } => {
                let (n, k) = self.pair_table.as_ref().unwrap().sample(rng);
                let a_n = rng.random::<f64>() < x[n];
                let a_k = rng.random::<f64>() < x[k];
                x[n] = reinforce(x[n], self.spec.alpha.at(n), a_n, a_k);
                Some(n)
            }
            rule => {
                let mut pair = None;
                let mut use_kept = false;
                if let Rule::RandomInteractions { scheme, .. } = rule {
                    match *scheme {
                        InteractionScheme::PairwiseGossip => {
                            pair = Some(self.pairs[rng.random_range(0..self.pairs.len())]);
                        }
                        InteractionScheme::EdgeSampling { keep } => {
                            for k in scratch.kept.iter_mut() {
                                *k = rng.random::<f64>() < keep;
                            }
                            use_kept = true;
                        }
                    }
                }
                fill_actions(x, rng, &mut scratch.actions);
                let kept = if use_kept { scratch.kept.as_slice() } else { &[] };
                self.synchronous_update(x, &scratch.actions, pair, kept, &mut scratch.next);
                std::mem::swap(x, &mut scratch.next);
                None
            }
        }
    }

    fn synchronous_update(&self, x: &[f64], a: &[bool], pair: Option<(usize, usize)>, kept: &[bool], out: &mut [f64]) {
        let g = self.graph;
        let alpha = &self.spec.alpha;
        match &self.spec.rule {
            Rule::Consensus => {
                for n in 0..g.n() {
                    out[n] = toward(x[n], alpha.at(n), action_mean(g.row_cols(n), g.row_weights(n), a));
                }
            }
            Rule::BoundedConfidence { tau } => {
                for n in 0..g.n() {
                    let s = action_mean(g.row_cols(n), g.row_weights(n), a);
                    out[n] = bounded_update(x[n], alpha.at(n), *tau, s);
                }
            }
            Rule::RandomInteractions { frozen_bystanders, .. } => {
                let own = |m: usize| if a[m] { 1.0 } else { 0.0 };
                if let Some((p, q)) = pair {
                    let shared = if a[p] == a[q] { own(p) } else { 0.5 };
                    for m in 0..g.n() {
                        out[m] = if m == p || m == q {
                            toward(x[m], alpha.at(m), shared)
                        } else if *frozen_bystanders {
                            x[m]
                        } else {
                            toward(x[m], alpha.at(m), own(m))
                        };
                    }
                } else {
                    let mut offset = 0;
                    for m in 0..g.n() {
                        let d = g.degree(m);
                        let s = kept_action_mean(g.row_cols(m), g.row_weights(m), &kept[offset..offset + d], a);
                        offset += d;
                        out[m] = match s {
                            Some(s) => toward(x[m], alpha.at(m), s),
                            None if *frozen_bystanders => x[m],
                            None => toward(x[m], alpha.at(m), own(m)),
                        };
                    }
                }
            }
            Rule::Reinforcement { .. } => unreachable!("reinforcement is pairwise"),
        }
    }

    /// Finite support of the interaction pattern with probabilities. Empty
    /// for rules without random interactions.
    pub fn interaction_support(&self, max_entries: usize) -> Result<Vec<(Interaction, f64)>> {
        match self.spec.rule {
            Rule::RandomInteractions { scheme: InteractionScheme::PairwiseGossip, .. } => {
                let p = 1.0 / self.pairs.len() as f64;
                Ok(self.pairs.iter().map(|&(a, b)| (Interaction::Pair(a, b), p)).collect())
            }
            Rule::RandomInteractions { scheme: InteractionScheme::EdgeSampling { keep }, .. } => {
                let m = self.graph.nnz();
                if m > max_entries {
                    return Err(Error::TooLarge {
                        what: format!("2^{m} edge subsets (limit 2^{max_entries})"),
                    });
                }
                Ok((0u64..1 << m)
                    .map(|bits| {
                        let mask: Vec<bool> = (0..m).map(|i| bits >> i & 1 == 1).collect();
                        let kept = mask.iter().filter(|&&b| b).count() as i32;
                        let p = keep.powi(kept) * (1.0 - keep).powi(m as i32 - kept);
                        (Interaction::Kept(mask), p)
                    })
                    .filter(|(_, p)| *p > 0.0)
                    .collect())
            }
            _ => Ok(Vec::new()),
        }
    }

    /// Exact distribution of the reinforcement pair. Empty for other rules.
    pub fn pair_distribution(&self) -> Vec<((usize, usize), f64)> {
        self.pair_table.as_ref().map(PairTable::distribution).unwrap_or_default()
    }
}
