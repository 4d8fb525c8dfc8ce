use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{context}: {message}")]
    Config { context: String, message: String },

    #[error("invalid floorplan: {0}")]
    InvalidFloorplan(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid too coarse: powered block `{0}` owns no cell")]
    GridTooCoarse(String),

    #[error("power entry names unknown block `{0}`")]
    UnknownBlock(String),

    #[error("cells {0} and {1} do not share a face")]
    NotAdjacent(usize, usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value encountered at iteration {0}; the system is invalid")]
    NonFinite(usize),

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("dense solve is limited to {limit} unknowns, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("field is empty")]
    EmptyField,

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("search space too large: more than {limit} candidates")]
    SearchSpace { limit: usize },

    #[error("no valid initial placement")]
    NoInitialPlacement,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn config(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { context: context.into(), message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}
