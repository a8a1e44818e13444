//! Row-stochastic influence matrices.
//!
//! Row `n` of a [`WeightedGraph`] holds the weights agent `n` puts on the
//! actions of the agents it observes. Rows are stored sparsely (sorted
//! column indices), which serves both the small dense examples and large
//! generated networks.

use std::collections::{BTreeSet, VecDeque};

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Rows summing to within this of one are stored as given; others are
/// divided by their sum.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Deviation from a unit row sum above which renormalization is logged.
pub const ROW_SUM_WARN: f64 = 1e-6;
/// Largest chain solved directly instead of by power iteration.
pub const DIRECT_SOLVE_MAX: usize = 64;
/// Laziness used by power iteration so periodic chains still converge.
pub const POWER_DAMPING: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl WeightedGraph {
    /// Assembles a graph from `(from, to, weight)` triples, where `weight` is
    /// the influence of agent `to`'s action on agent `from`. Zero weights are
    /// dropped and rows are renormalized to sum to one.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "graph needs at least one agent".into(),
            });
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(from, to, weight) in edges {
            for index in [from, to] {
                if index >= n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight { from, to, weight });
            }
            if weight < 0.0 {
                return Err(Error::NegativeWeight { from, to, weight });
            }
            if weight > 0.0 {
                rows[from].push((to, weight));
            }
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (row, mut entries) in rows.into_iter().enumerate() {
            if entries.is_empty() {
                return Err(Error::EmptyRow { row });
            }
            entries.sort_by_key(|&(c, _)| c);
            if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateEdge { from: row, to: w[0].0 });
            }
            let sum: f64 = entries.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > ROW_SUM_WARN {
                warn!("row {row} sums to {sum}, renormalizing");
            }
            for (c, w) in entries {
                cols.push(c);
                vals.push(if (sum - 1.0).abs() <= ROW_SUM_TOLERANCE { w } else { w / sum });
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { n, row_ptr, cols, vals })
    }

    /// Dense row-major input, e.g. a matrix copied from a worked example.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut edges = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (j, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Undirected edge list with uniform weights: each agent puts `1/deg` on
    /// every neighbor. A self-loop `(k, k)` counts once towards `deg(k)`.
    pub fn undirected_uniform(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        Self::undirected_weighted(n, &weighted)
    }

    /// Undirected edge list with symmetric raw weights, row-normalized.
    pub fn undirected_weighted(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut directed = Vec::with_capacity(2 * edges.len());
        for &(a, b, w) in edges {
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { from: a, to: b });
            }
            directed.push((a, b, w));
            if a != b {
                directed.push((b, a, w));
            }
        }
        Self::from_edges(n, &directed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzero entries of row `n` as `(column, weight)`.
    pub fn row(&self, n: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[n]..self.row_ptr[n + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn row_cols(&self, n: usize) -> &[usize] {
        &self.cols[self.row_ptr[n]..self.row_ptr[n + 1]]
    }

    pub fn row_weights(&self, n: usize) -> &[f64] {
        &self.vals[self.row_ptr[n]..self.row_ptr[n + 1]]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.row_ptr[n + 1] - self.row_ptr[n]
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        let cols = self.row_cols(from);
        match cols.binary_search(&to) {
            Ok(i) => self.row_weights(from)[i],
            Err(_) => 0.0,
        }
    }

    /// All nonzero entries as `(from, to, weight)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, w)| (r, c, w)))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (r, c, w) in self.entries() {
            m[r][c] = w;
        }
        m
    }

    /// `W x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| self.row(r).map(|(c, w)| w * x[c]).sum()).collect()
    }

    /// `πᵀ W`
    pub fn apply_left(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (r, c, w) in self.entries() {
            out[c] += pi[r] * w;
        }
        out
    }

    /// Unordered pairs `{n, k}`, `n < k`, joined by a nonzero weight in
    /// either direction. Self-loops are not pairs.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .entries()
            .filter(|&(r, c, _)| r != c)
            .map(|(r, c, _)| (r.min(c), r.max(c)))
            .collect();
        set.into_iter().collect()
    }
}

/// Strong connectivity of the nonzero pattern: everything reachable from
/// agent 0 along edges, and agent 0 reachable from everything.
pub fn is_irreducible(g: &WeightedGraph) -> bool {
    let n = g.n();
    let forward: Vec<Vec<usize>> = (0..n).map(|r| g.row_cols(r).to_vec()).collect();
    let mut backward = vec![Vec::new(); n];
    for (r, c, _) in g.entries() {
        backward[c].push(r);
    }
    reaches_all(&forward) && reaches_all(&backward)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Strictly positive left eigenvector of `W` for eigenvalue one, summing to
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.pi
    }

    pub fn uniform(n: usize) -> Self {
        Self { pi: vec![1.0 / n as f64; n] }
    }

    /// `‖πᵀW − πᵀ‖∞`
    pub fn residual(&self, g: &WeightedGraph) -> f64 {
        g.apply_left(&self.pi)
            .iter()
            .zip(&self.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Direct linear solve for chains up to [`DIRECT_SOLVE_MAX`] agents, damped
/// power iteration beyond that (or if the solve is numerically poor).
pub fn stationary_distribution(
    g: &WeightedGraph,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryDistribution> {
    if !is_irreducible(g) {
        return Err(Error::NotIrreducible);
    }
    if g.n() <= DIRECT_SOLVE_MAX {
        if let Some(pi) = direct_solve(g) {
            let dist = StationaryDistribution { pi };
            if dist.residual(g) <= tol.max(1e-13) {
                return Ok(dist);
            }
        }
    }
    power_iteration(g, tol, max_iter)
}

fn direct_solve(g: &WeightedGraph) -> Option<Vec<f64>> {
    let n = g.n();
    // (Wᵀ − I) π = 0 with the last equation replaced by Σ π = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (r, c, w) in g.entries() {
        a[(c, r)] += w;
    }
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    if x.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let sum: f64 = x.iter().sum();
    Some(x.iter().map(|v| v / sum).collect())
}

/// Power iteration on the damped chain `0.99 W + 0.01 I`, which has the same
/// stationary distribution as `W` and is aperiodic.
pub fn power_iteration(
    g: &WeightedGraph,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryDistribution> {
    if !is_irreducible(g) {
        return Err(Error::NotIrreducible);
    }
    let n = g.n();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let left = g.apply_left(&pi);
        let mut next: Vec<f64> = left
            .iter()
            .zip(&pi)
            .map(|(l, p)| POWER_DAMPING * l + (1.0 - POWER_DAMPING) * p)
            .collect();
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        let delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if delta < tol * (1.0 - POWER_DAMPING) {
            return Ok(StationaryDistribution { pi });
        }
    }
    Err(Error::NoConvergence { max_iter })
}

/// Step size: one value for every agent, or one per agent.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Alpha {
    #[inline]
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Alpha::Uniform(a) => *a,
            Alpha::PerNode(v) => v[n],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let values: &[f64] = match self {
            Alpha::Uniform(a) => std::slice::from_ref(a),
            Alpha::PerNode(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: v.len() });
                }
                v
            }
        };
        match values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            Some(&value) => Err(Error::AlphaOutOfRange { value }),
            None => Ok(()),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Alpha::Uniform(_))
    }
}

impl From<f64> for Alpha {
    fn from(a: f64) -> Self {
        Alpha::Uniform(a)
    }
}

/// `W_α = (I − D_α) + D_α W`, the expected one-step belief operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LazyMatrix {
    w_alpha: WeightedGraph,
}

impl LazyMatrix {
    pub fn matrix(&self) -> &WeightedGraph {
        &self.w_alpha
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.w_alpha.apply(x)
    }
}

pub fn lazy_matrix(g: &WeightedGraph, alpha: &Alpha) -> Result<LazyMatrix> {
    alpha.validate(g.n())?;
    Ok(LazyMatrix { w_alpha: lazy_of(g, |n| alpha.at(n)) })
}

pub(crate) fn lazy_of(g: &WeightedGraph, alpha: impl Fn(usize) -> f64) -> WeightedGraph {
    let n = g.n();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(g.nnz() + n);
    let mut vals = Vec::with_capacity(g.nnz() + n);
    row_ptr.push(0);
    for r in 0..n {
        let a = alpha(r);
        let mut diagonal_done = false;
        for (c, w) in g.row(r) {
            if !diagonal_done && c >= r {
                diagonal_done = true;
                let stay = if c == r { 1.0 - a + a * w } else { 1.0 - a };
                if stay != 0.0 {
                    cols.push(r);
                    vals.push(stay);
                }
                if c == r {
                    continue;
                }
            }
            if a * w != 0.0 {
                cols.push(c);
                vals.push(a * w);
            }
        }
        if !diagonal_done && a != 1.0 {
            cols.push(r);
            vals.push(1.0 - a);
        }
        row_ptr.push(cols.len());
    }
    WeightedGraph { n, row_ptr, cols, vals }
}

/// `W_α^t x(0)`: the mean belief vector after `t` steps.
pub fn expected_trajectory(
    g: &WeightedGraph,
    alpha: &Alpha,
    x0: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    if x0.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: x0.len() });
    }
    alpha.validate(g.n())?;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    for _ in 0..t {
        // x_n + α_n Σ_k w_nk (x_k − x_n): constant vectors stay exactly constant
        for (n, out) in next.iter_mut().enumerate() {
            let pull: f64 = g.row(n).map(|(k, w)| w * (x[k] - x[n])).sum();
            *out = x[n] + alpha.at(n) * pull;
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// Generators for connected undirected test networks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum RandomGraphModel {
    ErdosRenyi { p: f64 },
    /// Each agent linked to the `k` nearest agents on either side.
    Ring { k: usize },
    Complete,
}

/// Retry budget for drawing a connected Erdős–Rényi graph.
pub const CONNECTIVITY_ATTEMPTS: usize = 1000;

/// Undirected edge list `(a, b)`, `a < b`, of a connected random graph.
pub fn random_edges(n: usize, model: RandomGraphModel, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: format!("need n >= 2, got {n}") });
    }
    match model {
        RandomGraphModel::Complete => {
            Ok((0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect())
        }
        RandomGraphModel::Ring { k } => {
            if k == 0 {
                return Err(Error::InvalidParameter { name: "k", reason: "ring needs k >= 1".into() });
            }
            let mut set = BTreeSet::new();
            for a in 0..n {
                for d in 1..=k.min(n - 1) {
                    let b = (a + d) % n;
                    if a != b {
                        set.insert((a.min(b), a.max(b)));
                    }
                }
            }
            Ok(set.into_iter().collect())
        }
        RandomGraphModel::ErdosRenyi { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParameter { name: "p", reason: format!("need 0 < p <= 1, got {p}") });
            }
            let mut rng = rng::stream(seed);
            for _ in 0..CONNECTIVITY_ATTEMPTS {
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                    .filter(|_| rng.random::<f64>() < p)
                    .collect();
                if undirected_connected(n, &edges) {
                    return Ok(edges);
                }
            }
            Err(Error::ConnectivityFailure { attempts: CONNECTIVITY_ATTEMPTS })
        }
    }
}

fn undirected_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    reaches_all(&adj)
}

pub fn random_graph(n: usize, model: RandomGraphModel, seed: u64) -> Result<WeightedGraph> {
    WeightedGraph::undirected_uniform(n, &random_edges(n, model, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn hk4() -> WeightedGraph {
        WeightedGraph::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.25, 0.25],
            vec![0.25, 0.25, 0.0, 0.5],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn swap() -> WeightedGraph {
        WeightedGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap()
    }

    #[test]
    fn two_cycle() {
        assert_eq!(swap().to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn uniform_path_middle_row() {
        let g = WeightedGraph::undirected_uniform(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.to_dense()[1], vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn hk4_round_trips() {
        let rows = hk4().to_dense();
        assert_eq!(WeightedGraph::from_rows(&rows).unwrap().to_dense(), rows);
        assert_eq!(rows[1], vec![0.5, 0.0, 0.25, 0.25]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            WeightedGraph::from_edges(2, &[(0, 1, 1.0)]),
            Err(Error::EmptyRow { row: 1 })
        );
        assert!(matches!(
            WeightedGraph::from_edges(2, &[(0, 1, -1.0), (1, 0, 1.0)]),
            Err(Error::NegativeWeight { .. })
        ));
        assert_eq!(
            WeightedGraph::from_edges(2, &[(0, 2, 1.0)]),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        );
        assert!(matches!(
            WeightedGraph::from_edges(2, &[(0, 1, 1.0), (0, 1, 1.0), (1, 0, 1.0)]),
            Err(Error::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn rows_renormalized() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 3.0), (0, 0, 1.0), (1, 0, 0.2)]).unwrap();
        assert_eq!(g.to_dense(), vec![vec![0.25, 0.75], vec![1.0, 0.0]]);
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&swap()));
        let blocks = WeightedGraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)],
        )
        .unwrap();
        assert!(!is_irreducible(&blocks));
        assert!(is_irreducible(&hk4()));
    }

    /// Transitive closure by repeated squaring of the boolean matrix.
    fn closure_strongly_connected(n: usize, adj: &[Vec<bool>]) -> bool {
        let mut reach = adj.to_vec();
        for i in 0..n {
            reach[i][i] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        reach.iter().all(|row| row.iter().all(|&b| b))
    }

    #[test]
    fn irreducibility_matches_closure_exhaustively() {
        for n in 1..=4usize {
            let off: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
            for mask in 0u32..(1 << off.len()) {
                let mut adj = vec![vec![false; n]; n];
                // self-loops keep every row nonempty without changing reachability
                let mut edges: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
                for (bit, &(i, j)) in off.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        adj[i][j] = true;
                        edges.push((i, j, 1.0));
                    }
                }
                let g = WeightedGraph::from_edges(n, &edges).unwrap();
                assert_eq!(is_irreducible(&g), closure_strongly_connected(n, &adj), "n={n} mask={mask:b}");
            }
        }
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&swap(), 1e-14, 10_000).unwrap();
        assert_abs_diff_eq!(pi.as_slice()[0], 0.5, epsilon = 1e-14);

        let path = WeightedGraph::undirected_uniform(3, &[(0, 1), (1, 2)]).unwrap();
        let pi = stationary_distribution(&path, 1e-14, 10_000).unwrap();
        for (got, want) in pi.as_slice().iter().zip([0.25, 0.5, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        let pi = stationary_distribution(&hk4(), 1e-14, 10_000).unwrap();
        for (got, want) in pi.as_slice().iter().zip([3.0 / 14.0, 2.0 / 7.0, 2.0 / 7.0, 3.0 / 14.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        assert!(pi.residual(&hk4()) < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_direct_solve() {
        for g in [swap(), hk4(), random_graph(30, RandomGraphModel::ErdosRenyi { p: 0.2 }, 4).unwrap()] {
            let direct = stationary_distribution(&g, 1e-13, 100_000).unwrap();
            let power = power_iteration(&g, 1e-13, 1_000_000).unwrap();
            for (a, b) in direct.as_slice().iter().zip(power.as_slice()) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn large_graph_uses_power_iteration() {
        let g = random_graph(100, RandomGraphModel::Ring { k: 2 }, 0).unwrap();
        let pi = stationary_distribution(&g, 1e-13, 1_000_000).unwrap();
        assert!(pi.residual(&g) < 1e-10);
        assert_abs_diff_eq!(pi.as_slice()[17], 0.01, epsilon = 1e-10);
    }

    #[test]
    fn reducible_has_no_stationary() {
        let g = WeightedGraph::from_edges(2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(stationary_distribution(&g, 1e-12, 100), Err(Error::NotIrreducible));
    }

    #[test]
    fn lazy_examples() {
        let g = swap();
        let id = lazy_matrix(&g, &Alpha::Uniform(0.0)).unwrap();
        assert_eq!(id.matrix().to_dense(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let same = lazy_matrix(&g, &Alpha::Uniform(1.0)).unwrap();
        assert_eq!(same.matrix().to_dense(), g.to_dense());
        let half = lazy_matrix(&g, &Alpha::Uniform(0.5)).unwrap();
        assert_eq!(half.matrix().to_dense(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(
            lazy_matrix(&g, &Alpha::Uniform(1.5)),
            Err(Error::AlphaOutOfRange { value: 1.5 })
        );
    }

    #[test]
    fn lazy_with_self_weight_and_per_node_alpha() {
        let g = WeightedGraph::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![0.2, 0.3, 0.5]])
            .unwrap();
        let alpha = Alpha::PerNode(vec![0.2, 0.4, 1.0]);
        let lazy = lazy_matrix(&g, &alpha).unwrap().matrix().to_dense();
        let dense = g.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 - alpha.at(i) } else { 0.0 } + alpha.at(i) * dense[i][j];
                assert_abs_diff_eq!(lazy[i][j], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn trajectory_examples() {
        let g = swap();
        let a = Alpha::Uniform(0.5);
        assert_eq!(expected_trajectory(&g, &a, &[0.3, 0.9], 0).unwrap(), vec![0.3, 0.9]);
        assert_eq!(expected_trajectory(&hk4(), &Alpha::Uniform(0.3), &[1.0; 4], 50).unwrap(), vec![1.0; 4]);
        assert_eq!(expected_trajectory(&g, &a, &[0.0, 1.0], 1).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn generators() {
        let g = random_graph(3, RandomGraphModel::Complete, 0).unwrap();
        assert_eq!(g.to_dense(), vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]);

        let ring = random_graph(4, RandomGraphModel::Ring { k: 1 }, 0).unwrap();
        for r in 0..4 {
            assert_eq!(ring.row_weights(r), &[0.5, 0.5]);
        }

        let model = RandomGraphModel::ErdosRenyi { p: 0.3 };
        let a = random_graph(20, model, 11).unwrap();
        assert_eq!(a, random_graph(20, model, 11).unwrap());
        assert!(is_irreducible(&a));
        assert_ne!(a, random_graph(20, model, 12).unwrap());
    }

    #[test]
    fn sparse_er_gives_up() {
        let r = random_edges(50, RandomGraphModel::ErdosRenyi { p: 0.001 }, 1);
        assert_eq!(r, Err(Error::ConnectivityFailure { attempts: CONNECTIVITY_ATTEMPTS }));
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_graph() -> impl Strategy<Value = WeightedGraph> {
        (2usize..8, any::<u64>(), 0.15f64..1.0).prop_filter_map("connected", |(n, seed, p)| {
            random_graph(n, RandomGraphModel::ErdosRenyi { p }, seed).ok()
        })
    }

    fn arb_directed() -> impl Strategy<Value = WeightedGraph> {
        (2usize..7)
            .prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, n), n))
            .prop_filter_map("irreducible", |rows| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|w| if w < 0.4 { 0.0 } else { w }).collect())
                    .collect();
                WeightedGraph::from_rows(&rows).ok().filter(is_irreducible)
            })
    }

    proptest! {
        #[test]
        fn lazy_rows_stochastic(g in arb_directed(), a in 0.0f64..=1.0) {
            let lazy = lazy_matrix(&g, &Alpha::Uniform(a)).unwrap();
            for r in 0..g.n() {
                let sum: f64 = lazy.matrix().row_weights(r).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(lazy.matrix().row_weights(r).iter().all(|&w| w >= 0.0));
            }
        }

        #[test]
        fn lazy_shares_left_eigenvector(g in arb_directed(), a in 0.0f64..=1.0) {
            let pi = stationary_distribution(&g, 1e-14, 100_000).unwrap();
            let lazy = lazy_matrix(&g, &Alpha::Uniform(a)).unwrap();
            prop_assert!(pi.residual(lazy.matrix()) < 1e-10);
            prop_assert!(pi.as_slice().iter().all(|&p| p > 0.0));
            prop_assert!((pi.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn mean_dynamics_reach_weighted_average(
            g in arb_graph(),
            a in 0.8f64..=0.95,
            x0 in proptest::collection::vec(0.0f64..=1.0, 8),
        ) {
            // alpha < 1 makes the chain aperiodic; alpha >= 0.8 keeps the
            // spectral gap on any connected 8-node graph wide enough for 200 steps
            let x0 = &x0[..g.n()];
            let pi = stationary_distribution(&g, 1e-14, 100_000).unwrap();
            let target: f64 = pi.as_slice().iter().zip(x0).map(|(p, x)| p * x).sum();
            let x = expected_trajectory(&g, &Alpha::Uniform(a), x0, 200).unwrap();
            for v in x {
                prop_assert!((v - target).abs() < 1e-6, "{} vs {}", v, target);
            }
        }
    }
}
