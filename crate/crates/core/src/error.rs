use thiserror::Error;

/// Errors surfaced by the numeric kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A direct evaluation would exceed the configured work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// Requested size exceeds what the precision policy can certify.
    #[error("precision cap exceeded: {0}")]
    Precision(String),
    /// A linear system or matrix turned out singular.
    #[error("singular matrix: {0}")]
    Singular(String),
    /// No critical point of the phase inside the window support.
    #[error("no critical point in support")]
    NoCriticalPoint,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
