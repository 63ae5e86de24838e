//! Error type shared by every module of the crate.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of string construction, evaluation, and quadrature.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument left the mathematical domain of the operation.
    Domain(&'static str),
    /// A precondition on the inputs (grids, atom coverage) was violated.
    Precondition(&'static str),
    /// The string variant does not support the requested operation.
    UnsupportedVariant(&'static str),
    /// An iterative scheme stopped before reaching the requested
    /// tolerance; carries the error estimate it did achieve.
    Convergence { achieved: f64, requested: f64 },
    /// A linear-algebra routine failed (singular system, eigensolver
    /// iteration cap).
    Numeric(&'static str),
    /// String validation failure, naming the violated string property.
    InvalidString(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::UnsupportedVariant(msg) => write!(f, "unsupported string variant: {msg}"),
            Error::Convergence {
                achieved,
                requested,
            } => write!(
                f,
                "did not converge: achieved error estimate {achieved:e}, requested {requested:e}"
            ),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::InvalidString(msg) => write!(f, "invalid string: {msg}"),
        }
    }
}
