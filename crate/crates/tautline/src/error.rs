use std::fmt;

/// Errors produced by model construction, fitting and verification.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A tuning parameter is outside its admissible range.
    InvalidParameter(String),
    /// Input data violates a precondition (non-finite values, bad CSV, ...).
    InvalidData(String),
    /// A pooled derivative cannot attain the requested level, so the
    /// generalized inverse does not exist.
    Coercivity(String),
    /// The objective has no minimizer for this data set (all responses equal
    /// in a likelihood model).
    NonCoerciveData(String),
    /// A strict range was requested for constant responses.
    DegenerateRange(String),
    /// The requested certificate needs a differentiable model.
    UnsupportedCertificate(String),
    /// An iteration guard tripped; should not happen on valid input.
    NonTermination(String),
    /// Problem too large for an exhaustive oracle.
    SizeLimit(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::InvalidData(m) => write!(f, "invalid data: {m}"),
            Error::Coercivity(m) => write!(f, "coercivity error: {m}"),
            Error::NonCoerciveData(m) => write!(f, "non-coercive data: {m}"),
            Error::DegenerateRange(m) => write!(f, "degenerate range: {m}"),
            Error::UnsupportedCertificate(m) => write!(f, "unsupported certificate: {m}"),
            Error::NonTermination(m) => write!(f, "iteration guard: {m}"),
            Error::SizeLimit(m) => write!(f, "size limit: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
