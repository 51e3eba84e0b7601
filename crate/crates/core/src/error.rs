use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid interleaver: {0}")]
    InvalidInterleaver(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("session exhausted: fewer than two candidates remain at iteration {iteration}")]
    SessionExhausted { iteration: usize },

    #[error("monitor unusable: need at least 3 finite scores, found {found}")]
    MonitorUnusable { found: usize },

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),
}
