use thiserror::Error;

/// Errors raised across the nowcasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient history for `{series}`: need {required} observations, have {actual}")]
    InsufficientHistory {
        series: String,
        required: usize,
        actual: usize,
    },

    #[error("non-positive base value in `{series}` at {date}")]
    NonPositiveBase { series: String, date: String },

    #[error("series `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("unknown series `{0}`")]
    UnknownSeries(String),

    #[error("series `{0}` has no observed values")]
    AllMissing(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("rank-deficient design, collinear columns: {0:?}")]
    RankDeficient(Vec<usize>),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("non-stationary dynamics: {0}")]
    NonStationary(String),

    #[error("likelihood decreased from {previous} to {current} at EM iteration {iteration}")]
    LikelihoodDecrease {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("calendar inconsistency: {0}")]
    Calendar(String),

    #[error("unmapped sector codes: {0:?}")]
    UnmappedSectors(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
