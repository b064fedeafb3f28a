use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("total reserve must be positive")]
    ZeroReserve,

    #[error("at least {min} replicates required, got {got}")]
    TooFewReplicates { min: usize, got: usize },

    #[error("weight condition violated: column {column} sums to {sum}")]
    WeightViolation { column: usize, sum: f64 },

    #[error("instance not enumerable: {0}")]
    NotEnumerable(String),

    #[error("density exponent beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("oracle mode limited to small instances (q*d = {0} > 100)")]
    OracleTooLarge(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
