use thiserror::Error;

/// Everything that can go wrong while building graphs, stepping dynamics or
/// running experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent {row} has no incoming influence (empty row)")]
    EmptyRow { row: usize },
    #[error("negative weight {weight} on edge {from} -> {to}")]
    NegativeWeight { from: usize, to: usize, weight: f64 },
    #[error("weight {weight} on edge {from} -> {to} is not finite")]
    NonFiniteWeight { from: usize, to: usize, weight: f64 },
    #[error("index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("edge {from} -> {to} listed more than once")]
    DuplicateEdge { from: usize, to: usize },
    #[error("graph is not strongly connected")]
    NotIrreducible,
    #[error("no convergence after {max_iter} iterations")]
    NoConvergence { max_iter: usize },
    #[error("alpha {value} outside [0, 1]")]
    AlphaOutOfRange { value: f64 },
    #[error("could not draw a connected graph in {attempts} attempts")]
    ConnectivityFailure { attempts: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("graph has no edges to sample")]
    NoEdges,
    #[error("agent {agent} has {degree} neighbors, exact enumeration supports at most {max}")]
    NeighborhoodTooLarge { agent: usize, degree: usize, max: usize },
    #[error("enumeration too large: {what}")]
    TooLarge { what: String },
    #[error("no resolved trials")]
    NoResolvedTrials,
    #[error("trajectory of length {len} is shorter than window {window}")]
    TooShort { len: usize, window: usize },
    #[error("belief {value} at agent {agent} is outside [0, 1]")]
    BeliefOutOfRange { agent: usize, value: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("graph file line {line}: {message}")]
    GraphFormat { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
