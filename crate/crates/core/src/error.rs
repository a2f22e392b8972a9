use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the requested operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Argument outside the mathematical domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// The enumerable state space guard was exceeded.
    #[error("state space too large: {0}")]
    StateSpaceTooLarge(String),

    /// An operation was requested whose precondition cannot hold.
    #[error("logic error: {0}")]
    Logic(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("stability guard violated: {0}")]
    Stability(String),

    /// Quadrature failed to reach the requested tolerance.
    #[error("accuracy not reached: {0}")]
    Accuracy(String),

    /// A Fourier sum that must be real came out with a non-negligible
    /// imaginary part.
    #[error("imaginary residue {0:e} exceeds tolerance")]
    ImaginaryResidue(f64),

    #[error("parse error: {0}")]
    Parse(String),
}
