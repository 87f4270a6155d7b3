//! Crate-wide error type. Variants are grouped by the stage that raises them
//! so callers (and the CLI exit-code mapping) can tell validation problems
//! apart from runtime failures.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid anisotropy: {0}")]
    InvalidAnisotropy(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid curve at vertex {index}: {reason}")]
    InvalidCurveAt { index: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gradient undefined at the zero vector")]
    ZeroVector,

    #[error("curve is not convex: {0}")]
    NotConvex(String),

    #[error("flow step rejected: {0}")]
    StepRejected(String),

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("generator gave up after {attempts} attempts: {reason}")]
    GeneratorExhausted { attempts: usize, reason: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
