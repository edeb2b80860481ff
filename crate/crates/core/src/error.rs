//! Error types shared across the library and the CLI.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or state outside the documented domain of an
    /// operation (non-finite input, index out of range, negative radius...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration file failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A step size or schedule violates the admissibility ceiling of the
    /// theorem it is used with. Names the violated ceiling.
    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// A ledger constant cannot be formed because a guard in its defining
    /// display fails (for example a denominator becomes non-positive).
    /// Names the offending display.
    #[error("constant infeasible: {0}")]
    ConstantInfeasible(String),

    /// A trajectory left the finite range of f64 at the reported step.
    #[error("numerical blowup at step {step}")]
    Blowup { step: usize },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    /// Ensemble too large or too small for the requested operation.
    #[error("size error: {0}")]
    Size(String),

    /// A verification subcommand found a failing row.
    #[error("verification failure: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, also used as the CLI exit status.
    pub fn code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Size(_) => 2,
            Error::Admissibility(_) | Error::ConstantInfeasible(_) => 3,
            Error::Blowup { .. } | Error::QuadratureNonConvergence(_) => 4,
            Error::Verification(_) => 5,
            Error::Io(_) => 2,
        }
    }
}
