use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes or owning algebras do not conform.
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input lacks a capability the operation needs (derivative depth,
    /// a verified function class, a decay envelope, ...).
    #[error("capability error: {0}")]
    Capability(String),

    /// A resolvent was requested at a point of the spectrum.
    #[error("singularity: {0}")]
    Singular(String),

    /// Spectral shift reconstruction failed; carries the condition estimate.
    #[error("reconstruction error: {message} (condition estimate {condition:.3e})")]
    Reconstruction { message: String, condition: f64 },

    /// Reading or writing a persisted store failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// Text parsing failure for the operator exchange format.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}
