use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid interval [{lo}, {hi}]: lower bound exceeds upper bound")]
    Interval { lo: usize, hi: usize },
    #[error("trace too short: evaluating at t={t} needs {needed} samples, trace has {len}")]
    TraceTooShort { t: usize, needed: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("missing Lipschitz constant for the {0} player")]
    MissingLipschitz(&'static str),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("no transition rule applies: {0}")]
    NoEdge(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
