use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {what} at node ({i}, {j})")]
    NonFinite { what: &'static str, i: usize, j: usize },

    #[error("singular matrix: zero pivot in column {column} (node ({i}, {j}))")]
    SingularMatrix { column: usize, i: usize, j: usize },

    #[error("forward solve produced non-finite values at time step {step}")]
    NonFiniteStep { step: usize },

    #[error("forward solve failed during iteration {iteration}: {source}")]
    ForwardFailure {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate observation: {0}")]
    DegenerateData(String),

    #[error("trajectory unavailable: {0}")]
    TrajectoryUnavailable(&'static str),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
