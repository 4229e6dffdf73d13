use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs violate an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two routes that must agree did not, e.g. a closed-form Lee-Yang zero
    /// that fails the polynomial check, or a Kraus family that is not
    /// trace preserving.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// A numerical routine (root finder, eigen-solver) failed to converge.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The conditioning outcome of a measurement sequence has (numerically)
    /// zero probability.
    #[error("conditioning outcome has probability {probability:e}; conditional correlator is undefined")]
    UndefinedConditional { probability: f64 },

    /// A density operator with a significantly negative eigenvalue.
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
