//! Reproducible Monte Carlo experiments.
//!
//! Trials are independent: each draws from its own stream derived from
//! `(master_seed, trial_id)`, so outcomes are identical for any worker count
//! and any scheduling order.

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, classify, AbsorptionClass};
use crate::dynamics::{Dynamics, DynamicsSpec};
use crate::error::{Error, Result};
use crate::graph::{is_irreducible, random_graph, RandomGraphModel, StationaryDistribution, WeightedGraph};
use crate::graph_file;
use crate::rng;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_SAMPLE_EVERY: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GraphSource {
    Generated { n: usize, model: RandomGraphModel, seed: u64 },
    File(PathBuf),
    /// Dense row-major weights.
    Matrix(Vec<Vec<f64>>),
}

impl GraphSource {
    pub fn load(&self) -> Result<WeightedGraph> {
        match self {
            GraphSource::Generated { n, model, seed } => random_graph(*n, *model, *seed),
            GraphSource::File(path) => graph_file::read_graph(path),
            GraphSource::Matrix(rows) => WeightedGraph::from_rows(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitMode {
    /// Every agent starts at `p0`.
    Constant(f64),
    /// Independent uniform beliefs with mean `p0`, drawn from the trial's
    /// stream on `[max(0, 2 p0 − 1), min(1, 2 p0)]`.
    IidUniformMean(f64),
    Explicit(Vec<f64>),
}

impl InitMode {
    pub fn p0(&self) -> Option<f64> {
        match self {
            InitMode::Constant(p) | InitMode::IidUniformMean(p) => Some(*p),
            InitMode::Explicit(_) => None,
        }
    }

    pub fn with_p0(&self, p0: f64) -> Result<Self> {
        match self {
            InitMode::Constant(_) => Ok(InitMode::Constant(p0)),
            InitMode::IidUniformMean(_) => Ok(InitMode::IidUniformMean(p0)),
            InitMode::Explicit(_) => Err(Error::InvalidParameter {
                name: "init.mode",
                reason: "a p0 sweep needs constant or iid_uniform_mean initialization".into(),
            }),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            InitMode::Constant(p) => vec![*p; n],
            InitMode::IidUniformMean(p) => {
                let lo = (2.0 * p - 1.0).max(0.0);
                let hi = (2.0 * p).min(1.0);
                (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
            }
            InitMode::Explicit(x) => x.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub dynamics: DynamicsSpec,
    pub init: InitMode,
    pub trials: u64,
    pub max_steps: u64,
    pub epsilon: f64,
    pub master_seed: u64,
    /// Cadence of recorded `q(t)` and `x(t)` samples.
    pub sample_every: u64,
    /// Trials `0..trajectory_trials` keep their sampled belief vectors.
    pub trajectory_trials: u64,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSource, dynamics: DynamicsSpec, init: InitMode) -> Self {
        Self {
            graph,
            dynamics,
            init,
            trials: 1,
            max_steps: DEFAULT_MAX_STEPS,
            epsilon: DEFAULT_EPSILON,
            master_seed: 0,
            sample_every: DEFAULT_SAMPLE_EVERY,
            trajectory_trials: 1,
        }
    }

    /// Checks everything that does not need the graph.
    pub fn validate(&self) -> Result<()> {
        let invalid = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.trials < 1 {
            return invalid("run.trials", "need at least one trial".into());
        }
        if self.max_steps < 1 {
            return invalid("run.max_steps", "need at least one step".into());
        }
        if self.sample_every < 1 {
            return invalid("run.sample_every", "must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return invalid("run.epsilon", format!("must lie in (0, 0.5), got {}", self.epsilon));
        }
        match &self.init {
            InitMode::Constant(p) | InitMode::IidUniformMean(p) if !(0.0..=1.0).contains(p) => {
                invalid("init.p0", format!("must lie in [0, 1], got {p}"))
            }
            InitMode::Explicit(x) => match x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                Some(v) => invalid("init.values", format!("belief {v} outside [0, 1]")),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_id: u64,
    pub seed: u64,
    pub class: AbsorptionClass,
    /// Steps taken until resolution, or `max_steps`.
    pub steps: u64,
    pub q0: f64,
    pub q_final: f64,
    pub final_beliefs: Vec<f64>,
    /// `(t, q(t))` every `sample_every` steps plus the final step.
    pub q_samples: Vec<(u64, f64)>,
    /// `(t, x(t))` on the same cadence; empty unless the trial is traced.
    pub x_samples: Vec<(u64, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub trials: u64,
    pub failed: u64,
    pub herd0: u64,
    pub herd1: u64,
    pub polarized: u64,
    pub unresolved: u64,
    /// Herd1 share of resolved trials; `None` when nothing resolved.
    pub herd1_freq: Option<f64>,
    /// Wilson 99% half-width of `herd1_freq`.
    pub herd1_ci: Option<f64>,
    pub mean_final_belief: f64,
    pub var_final_belief: f64,
    pub mean_q0: f64,
    pub mean_steps: f64,
    pub epsilon: f64,
    pub max_steps: u64,
}

/// Aggregates outcomes in trial-id order, so any permutation of the input
/// gives the same summary.
pub fn summarize(outcomes: &[TrialOutcome], failed: u64, epsilon: f64, max_steps: u64) -> ExperimentSummary {
    let mut sorted: Vec<&TrialOutcome> = outcomes.iter().collect();
    sorted.sort_by_key(|o| o.trial_id);
    let count = |c: AbsorptionClass| sorted.iter().filter(|o| o.class == c).count() as u64;
    let m = sorted.len() as f64;
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| {
        if sorted.is_empty() {
            0.0
        } else {
            sorted.iter().map(|o| f(o)).sum::<f64>() / m
        }
    };
    let mean_final = mean(&|o| o.q_final);
    let var_final = mean(&|o| (o.q_final - mean_final).powi(2));
    let classes: Vec<AbsorptionClass> = sorted.iter().map(|o| o.class).collect();
    let estimate = analysis::herd_probability_estimate(&classes).ok();
    ExperimentSummary {
        trials: sorted.len() as u64 + failed,
        failed,
        herd0: count(AbsorptionClass::Herd0),
        herd1: count(AbsorptionClass::Herd1),
        polarized: count(AbsorptionClass::Polarized),
        unresolved: count(AbsorptionClass::Unresolved),
        herd1_freq: estimate.map(|e| e.p_hat),
        herd1_ci: estimate.map(|e| e.ci_halfwidth),
        mean_final_belief: mean_final,
        var_final_belief: var_final,
        mean_q0: mean(&|o| o.q0),
        mean_steps: mean(&|o| o.steps as f64),
        epsilon,
        max_steps,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub summary: ExperimentSummary,
    /// Successful trials in trial-id order.
    pub outcomes: Vec<TrialOutcome>,
    pub failures: Vec<(u64, Error)>,
}

/// A validated configuration with its graph loaded and `q` weights solved.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    graph: WeightedGraph,
    weights: StationaryDistribution,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let graph = config.graph.load()?;
        if !is_irreducible(&graph) {
            return Err(Error::NotIrreducible);
        }
        config.dynamics.validate(graph.n())?;
        if let InitMode::Explicit(x) = &config.init {
            if x.len() != graph.n() {
                return Err(Error::DimensionMismatch { expected: graph.n(), found: x.len() });
            }
        }
        // fail early on rule/graph combinations the engine rejects
        Dynamics::new(&graph, config.dynamics.clone())?;
        let weights = analysis::martingale_weights(&graph, &config.dynamics)?;
        Ok(Self { config, graph, weights })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Weights of `q = πᵀx`.
    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    pub fn dynamics(&self) -> Dynamics<'_> {
        Dynamics::new(&self.graph, self.config.dynamics.clone()).expect("validated in prepare")
    }

    fn q(&self, x: &[f64]) -> f64 {
        analysis::weighted_average(self.weights(), x).expect("dimensions checked in prepare")
    }

    /// Runs one trial until every belief is resolved or `max_steps` is hit.
    pub fn run_trial(&self, trial_id: u64) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let seed = rng::trial_seed(cfg.master_seed, trial_id);
        let mut stream = rng::stream(seed);
        let dynamics = self.dynamics();
        let n = self.graph.n();
        let mut x = cfg.init.draw(n, &mut stream);
        let traced = trial_id < cfg.trajectory_trials;
        let eps = cfg.epsilon;

        let q0 = self.q(&x);
        let mut q_samples = vec![(0, q0)];
        let mut x_samples = if traced { vec![(0, x.clone())] } else { Vec::new() };
        let mut scratch = dynamics.scratch();
        let mut steps = 0;
        let mut class = classify(&x, eps);
        // a polarized split only ends the trial under rules that keep it
        let holds = cfg.dynamics.rule.holds_polarization();
        let done = |c: AbsorptionClass| match c {
            AbsorptionClass::Herd0 | AbsorptionClass::Herd1 => true,
            AbsorptionClass::Polarized => holds,
            AbsorptionClass::Unresolved => false,
        };

        if dynamics.is_pairwise() {
            // one agent moves per step: keep the boundary counts incrementally
            let side = |v: f64| (v < eps) as u8 | ((v > 1.0 - eps) as u8) << 1;
            let mut sides: Vec<u8> = x.iter().map(|&v| side(v)).collect();
            let mut interior = sides.iter().filter(|&&s| s == 0).count();
            while steps < cfg.max_steps && !(interior == 0 && done(classify(&x, eps))) {
                if let Some(agent) = dynamics.step_in_place(&mut x, &mut scratch, &mut stream) {
                    let s = side(x[agent]);
                    interior = interior + (s == 0) as usize - (sides[agent] == 0) as usize;
                    sides[agent] = s;
                }
                steps += 1;
                if steps % cfg.sample_every == 0 {
                    q_samples.push((steps, self.q(&x)));
                    if traced {
                        x_samples.push((steps, x.clone()));
                    }
                }
            }
            class = classify(&x, eps);
        } else {
            while !done(class) && steps < cfg.max_steps {
                dynamics.step_in_place(&mut x, &mut scratch, &mut stream);
                steps += 1;
                if steps % cfg.sample_every == 0 {
                    q_samples.push((steps, self.q(&x)));
                    if traced {
                        x_samples.push((steps, x.clone()));
                    }
                }
                class = classify(&x, eps);
            }
        }

        let q_final = self.q(&x);
        if q_samples.last().map(|s| s.0) != Some(steps) {
            q_samples.push((steps, q_final));
            if traced {
                x_samples.push((steps, x.clone()));
            }
        }
        Ok(TrialOutcome { trial_id, seed, class, steps, q0, q_final, final_beliefs: x, q_samples, x_samples })
    }

    /// Belief vector after exactly `steps` steps, ignoring absorption.
    pub fn run_fixed_horizon(&self, trial_id: u64, steps: u64) -> Vec<f64> {
        let mut stream = rng::trial_stream(self.config.master_seed, trial_id);
        let dynamics = self.dynamics();
        let mut x = self.config.init.draw(self.graph.n(), &mut stream);
        let mut scratch = dynamics.scratch();
        for _ in 0..steps {
            dynamics.step_in_place(&mut x, &mut scratch, &mut stream);
        }
        x
    }

    /// Runs every trial on `threads` workers (the global pool when `None`).
    pub fn run(&self, threads: Option<usize>) -> Result<ExperimentResults> {
        let work = || -> Vec<(u64, Result<TrialOutcome>)> {
            (0..self.config.trials).into_par_iter().map(|id| (id, self.run_trial(id))).collect()
        };
        let results = match threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter { name: "threads", reason: e.to_string() })?
                .install(work),
            None => work(),
        };
        let mut outcomes = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (id, r) in results {
            match r {
                Ok(o) => outcomes.push(o),
                Err(e) => failures.push((id, e)),
            }
        }
        let summary = summarize(&outcomes, failures.len() as u64, self.config.epsilon, self.config.max_steps);
        Ok(ExperimentResults { summary, outcomes, failures })
    }
}

pub fn run_trial(cfg: &ExperimentConfig, trial_id: u64) -> Result<TrialOutcome> {
    Experiment::prepare(cfg.clone())?.run_trial(trial_id)
}

pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResults> {
    Experiment::prepare(cfg.clone())?.run(threads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p0: f64,
    pub mean_final: f64,
    pub var_final: f64,
    pub herd1_freq: Option<f64>,
    pub ci: Option<f64>,
}

/// One experiment per initial mean belief in `grid`, all other settings
/// (including the master seed) shared.
pub fn sweep_p0(cfg: &ExperimentConfig, grid: &[f64], threads: Option<usize>) -> Result<Vec<SweepRow>> {
    if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter { name: "p0", reason: format!("grid value {p} outside [0, 1]") });
    }
    let init = cfg.init.with_p0(0.5)?;
    let base = Experiment::prepare(ExperimentConfig { init, ..cfg.clone() })?;
    grid.iter()
        .map(|&p0| {
            let exp = Experiment {
                config: ExperimentConfig { init: cfg.init.with_p0(p0)?, ..base.config.clone() },
                graph: base.graph.clone(),
                weights: base.weights.clone(),
            };
            let s = exp.run(threads)?.summary;
            Ok(SweepRow {
                p0,
                mean_final: s.mean_final_belief,
                var_final: s.var_final_belief,
                herd1_freq: s.herd1_freq,
                ci: s.herd1_ci,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DynamicsSpec;

    fn hk4_rows() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.25, 0.25],
            vec![0.25, 0.25, 0.0, 0.5],
            vec![0.0, 0.0, 1.0, 0.0],
        ]
    }

    fn er20() -> GraphSource {
        GraphSource::Generated { n: 20, model: RandomGraphModel::ErdosRenyi { p: 0.3 }, seed: 1 }
    }

    #[test]
    fn all_ones_is_resolved_immediately() {
        let cfg = ExperimentConfig::new(
            GraphSource::Matrix(hk4_rows()),
            DynamicsSpec::consensus(0.3),
            InitMode::Explicit(vec![1.0; 4]),
        );
        let o = run_trial(&cfg, 0).unwrap();
        assert_eq!((o.class, o.steps, o.q0, o.q_final), (AbsorptionClass::Herd1, 0, 1.0, 1.0));
    }

    #[test]
    fn polarized_start_ends_trial_only_when_it_persists() {
        let split = InitMode::Explicit(vec![1.0, 0.0, 0.0, 1.0]);
        for spec in [DynamicsSpec::consensus(0.3), DynamicsSpec::pairwise_gossip(0.5)] {
            let cfg = ExperimentConfig::new(GraphSource::Matrix(hk4_rows()), spec, split.clone());
            let o = run_trial(&cfg, 0).unwrap();
            assert!(o.steps > 0 && matches!(o.class, AbsorptionClass::Herd0 | AbsorptionClass::Herd1), "{o:?}");
        }
        for spec in [DynamicsSpec::reinforcement(0.3), DynamicsSpec::bounded_confidence(0.3, 0.25)] {
            let cfg = ExperimentConfig::new(GraphSource::Matrix(hk4_rows()), spec, split.clone());
            let o = run_trial(&cfg, 0).unwrap();
            assert_eq!((o.class, o.steps), (AbsorptionClass::Polarized, 0));
        }
    }

    #[test]
    fn trials_replay_bit_identically() {
        let mut cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::IidUniformMean(0.4));
        cfg.master_seed = 99;
        let exp = Experiment::prepare(cfg).unwrap();
        assert_eq!(exp.run_trial(7).unwrap(), exp.run_trial(7).unwrap());
        assert_ne!(exp.run_trial(7).unwrap().seed, exp.run_trial(8).unwrap().seed);
    }

    #[test]
    fn consensus_never_polarizes() {
        let mut cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::Constant(0.5));
        cfg.trials = 200;
        let r = run_experiment(&cfg, None).unwrap();
        assert_eq!(r.summary.polarized, 0);
        assert_eq!(r.summary.unresolved, 0);
        for o in &r.outcomes {
            match o.class {
                AbsorptionClass::Herd1 => assert!(o.q_final > 1.0 - cfg.epsilon),
                AbsorptionClass::Herd0 => assert!(o.q_final < cfg.epsilon),
                c => panic!("unexpected {c}"),
            }
        }
    }

    #[test]
    fn constant_one_always_herds_to_one() {
        let mut cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::Constant(1.0));
        cfg.trials = 20;
        let s = run_experiment(&cfg, None).unwrap().summary;
        assert_eq!(s.herd1_freq, Some(1.0));
    }

    #[test]
    fn iid_init_has_requested_mean() {
        let mut r = rng::stream(0);
        for p0 in [0.1, 0.5, 0.85] {
            let x = InitMode::IidUniformMean(p0).draw(200_000, &mut r);
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            assert!((mean - p0).abs() < 0.003, "{p0}: {mean}");
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn summary_ignores_order() {
        let mut cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::Constant(0.3));
        cfg.trials = 50;
        let r = run_experiment(&cfg, None).unwrap();
        let mut shuffled = r.outcomes.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        assert_eq!(summarize(&shuffled, 0, cfg.epsilon, cfg.max_steps), r.summary);
        assert!(r.summary.var_final_belief <= 0.25);
    }

    #[test]
    fn traced_trials_keep_samples() {
        let mut cfg = ExperimentConfig::new(
            GraphSource::Matrix(hk4_rows()),
            DynamicsSpec::bounded_confidence(0.3, 0.25),
            InitMode::Explicit(vec![0.0, 0.45, 0.55, 1.0]),
        );
        cfg.max_steps = 1000;
        cfg.sample_every = 10;
        let o = run_trial(&cfg, 0).unwrap();
        assert_eq!(o.class, AbsorptionClass::Unresolved);
        assert_eq!(o.steps, 1000);
        assert_eq!(o.x_samples.len(), 101);
        assert_eq!(o.q_samples.len(), 101);
        let untraced = run_trial(&cfg, 1).unwrap();
        assert!(untraced.x_samples.is_empty());
    }

    #[test]
    fn sweep_endpoints() {
        let mut cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::Constant(0.5));
        cfg.trials = 10;
        let rows = sweep_p0(&cfg, &[0.0, 1.0], None).unwrap();
        assert_eq!((rows[0].p0, rows[0].mean_final, rows[0].var_final), (0.0, 0.0, 0.0));
        assert_eq!(rows[0].herd1_freq, Some(0.0));
        assert_eq!(rows[1].mean_final, 1.0);
        assert!(sweep_p0(&cfg, &[1.5], None).is_err());
    }

    #[test]
    fn prepare_rejects_bad_configs() {
        let reducible = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let cfg = ExperimentConfig::new(GraphSource::Matrix(reducible), DynamicsSpec::consensus(0.3), InitMode::Constant(0.5));
        assert_eq!(Experiment::prepare(cfg).unwrap_err(), Error::NotIrreducible);

        let cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::Explicit(vec![0.5; 3]));
        assert!(matches!(Experiment::prepare(cfg), Err(Error::DimensionMismatch { .. })));

        let mut cfg = ExperimentConfig::new(er20(), DynamicsSpec::consensus(0.3), InitMode::Constant(0.5));
        cfg.epsilon = 0.7;
        assert!(Experiment::prepare(cfg).is_err());
    }
}
