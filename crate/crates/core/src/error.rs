use thiserror::Error;

/// Errors raised by simulation, detection and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("path is not nearest-neighbor at index {index}")]
    NotNearestNeighbor { index: usize },

    #[error("time {t} outside [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("under-resolved discretization: {0}")]
    UnderResolved(String),

    #[error("no events observed: {0}")]
    NoEvents(String),

    #[error("run cancelled")]
    Cancelled,

    #[error("malformed path dump: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
