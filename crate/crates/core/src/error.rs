use thiserror::Error;

/// Errors produced anywhere in the design, coding and transport pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Riccati iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },

    #[error("innovation covariance R + C P C^T is numerically singular")]
    SingularInnovationCovariance,

    #[error("argument outside the function domain: {0}")]
    DomainError(String),

    #[error("matrix is rank deficient (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("kernel is empty: matrix has as many rows as columns")]
    EmptyKernel,

    #[error("matrix `{0}` is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("invalid key dimensions: {0}")]
    DimsInvalid(String),

    #[error("could not sample full-rank coding matrices after {0} attempts")]
    RankRetryExhausted(usize),

    #[error("decoded alarm {raw} is not within 1e-6 of 0 or 1")]
    DecodeDrift { raw: f64 },

    #[error("protocol violation (code {code}): {detail}")]
    Protocol { code: u8, detail: String },

    #[error("transport: {0}")]
    Transport(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid argument: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dims(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
