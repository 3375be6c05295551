use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands live in different ring contexts")]
    ContextMismatch,

    #[error("operation requires {expected} mode")]
    ModeMismatch { expected: &'static str },

    #[error("not a total x-derivative: {0}")]
    NotExact(String),

    #[error("monomial of D-weight one cannot be inverted by (D-1): {0}")]
    WeightOneComponent(String),

    #[error("monomial of D-weight zero cannot be inverted by D: {0}")]
    WeightZeroComponent(String),

    #[error("Miura map is singular at epsilon = 0")]
    SingularAtEpsilonZero,

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("linear system is inconsistent: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
