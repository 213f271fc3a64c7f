use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("prime mismatch: {left} vs {right}")]
    PrimeMismatch { left: u32, right: u32 },

    #[error("empty precision window: valuation {valuation} is not below precision {precision}")]
    EmptyWindow { valuation: i64, precision: i64 },

    #[error("insufficient p-adic precision: need digits below index {needed}, have {available}")]
    InsufficientPrecision { needed: i64, available: i64 },

    #[error("invalid step measure: {0}")]
    InvalidMeasure(String),

    #[error("walk is not contracting at {place}: drift coefficient {coeff} is not negative")]
    NotContracting { place: String, coeff: String },

    #[error("digits failed to certify within {max_steps} steps")]
    MaxStepsExceeded { max_steps: usize },

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error("invalid solenoid point: {0}")]
    InvalidPoint(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
