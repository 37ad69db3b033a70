//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("base {base} out of range [0, 1 - 1/phi] for job {job}")]
    BaseOutOfRange { job: usize, base: String },

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("job {job} has zero or negative processing time")]
    NonPositiveProcessingTime { job: usize },

    #[error("inconsistent scale: {0}")]
    InconsistentScale(String),

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("work budget exceeded: required {required}, budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("zero delta: |p(A) - p(B)| = 0 for A={a:?}, B={b:?}")]
    ZeroDelta { a: Vec<usize>, b: Vec<usize> },

    #[error("iteration limit {limit} exceeded")]
    IterationLimitExceeded { limit: u64 },

    #[error("wrong k: expected {expected}, got {got}")]
    WrongK { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage/input, 3 budget, 4 validation.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::BudgetExceeded { .. } => 3,
            Error::IterationLimitExceeded { .. } => 3,
            _ => 2,
        }
    }
}
