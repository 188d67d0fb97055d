use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {what} = {value} (expected {expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation insufficient: tail mass {tail_mass:e} exceeds {limit:e}")]
    TruncationInsufficient { tail_mass: f64, limit: f64 },
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl Into<f64>, expected: &'static str) -> Self {
        Error::Domain {
            what,
            value: value.into(),
            expected,
        }
    }
}
