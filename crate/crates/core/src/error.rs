use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value is out of range or inconsistent.
    InvalidArgument(String),
    /// An allocation violates one of the power/correlation constraints.
    Infeasible(String),
    /// A matrix that must be inverted is singular.
    Singular(String),
    /// An internal invariant broke; indicates a bug rather than bad input.
    Internal(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::Infeasible(m) => write!(f, "infeasible allocation: {m}"),
            Error::Singular(m) => write!(f, "singular matrix: {m}"),
            Error::Internal(m) => write!(f, "internal invariant failure: {m}"),
        }
    }
}

impl core::error::Error for Error {}
