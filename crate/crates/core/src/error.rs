use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluation budget exhausted ({max_fe} evaluations)")]
    BudgetExhausted { max_fe: u64 },

    #[error("evaluator of `{problem}` returned a non-finite value at {x:?}")]
    NonFiniteOutput { problem: String, x: Vec<f64> },

    #[error("point lies outside the search box")]
    OutOfBounds,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty front")]
    EmptyFront,

    #[error("front of size {0} is too small for mutation (need at least 4)")]
    FrontTooSmall(usize),

    #[error("success rate needs at least one trial")]
    ZeroTrials,

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("problem `{name}` does not support dimension {dim}")]
    UnsupportedDimension { name: String, dim: usize },

    #[error("problem entry has no known optimizer")]
    MissingOptimizer,

    #[error("no traces supplied")]
    EmptyTraceSet,

    #[error("mismatched problem sets: {0}")]
    MismatchedProblems(String),

    #[error("invalid statistics input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("run ({problem}, {run_id}) failed: {source}")]
    RunFailed {
        problem: String,
        run_id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
