//! Monte Carlo simulation of opinion dynamics driven by observed actions.
//!
//! Agents hold private beliefs `x_n ∈ [0, 1]`, act by drawing a Bernoulli
//! action with that probability, and update from the actions of the agents
//! they observe through a row-stochastic influence matrix. Four update rules
//! are provided (consensus, random interactions, bounded confidence and
//! reinforcement) together with the tools to check their limit behavior:
//! herding, polarization and persistent fluctuation.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod graph_file;
pub mod montecarlo;
pub mod report;
pub mod rng;

pub use analysis::{classify, AbsorptionClass, HerdEstimate, MartingaleDiagnostics, NextStateDistribution};
pub use dynamics::{
    ActionVector, BeliefVector, Dynamics, DynamicsSpec, InteractionScheme, PairSelection, Rule,
};
pub use error::{Error, Result};
pub use graph::{Alpha, LazyMatrix, RandomGraphModel, StationaryDistribution, WeightedGraph};
pub use montecarlo::{
    Experiment, ExperimentConfig, ExperimentResults, ExperimentSummary, GraphSource, InitMode, SweepRow,
    TrialOutcome,
};
