use thiserror::Error;

/// Errors raised by the solvers and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A dual variable left the domain of the loss conjugate.
    #[error("dual variable of instance {instance} is outside the conjugate domain: {detail}")]
    Domain { instance: usize, detail: String },

    /// The requested operation is not defined for this loss/regularizer.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A loss or regularizer evaluated to a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyData,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
