use thiserror::Error;

/// Errors raised by the simulators and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FireError {
    /// A parameter is outside the range the dynamics are defined for.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A query or update addressed a point outside the simulated box or horizon.
    #[error("out of domain: {0}")]
    Domain(String),
    /// Two marks (or a mark and a box edge) share the same spatial coordinate.
    #[error("duplicate mark coordinate x = {0}")]
    DuplicateCoordinate(f64),
    /// A simulator self-check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FireError>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(FireError::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FireError::Domain(msg.into()))
}
