use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `exp(-D / lambda)` lost entries to underflow. The raw-kernel Sinkhorn
    /// iteration cannot represent such a coupling.
    #[error(
        "Sinkhorn kernel underflow: {count} entries of exp(-D/lambda) are below f64::MIN_POSITIVE \
         (max cost {max_cost:.6e}, lambda {lambda}); use a larger lambda or rescale the data"
    )]
    KernelUnderflow {
        count: usize,
        max_cost: f64,
        lambda: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn invalid_param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
