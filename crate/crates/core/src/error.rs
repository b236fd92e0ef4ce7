use thiserror::Error;

/// Errors raised by model construction, simulation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or an inconsistent experiment description.
    #[error("configuration error: {0}")]
    Config(String),

    /// The request is well-formed but not supported for this model/dimension.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A mathematical precondition of the requested computation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An invariant that should hold by construction was broken.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
