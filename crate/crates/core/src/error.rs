use thiserror::Error;

/// Errors raised by the siting library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or missing configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("site {0} has no other sited station to be adjacent to")]
    NoNeighbor(usize),

    /// An exact enumeration would exceed its hard size limit.
    #[error("oracle guard exceeded: {what} = {size} > {limit}")]
    GuardExceeded { what: &'static str, size: u128, limit: u128 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
