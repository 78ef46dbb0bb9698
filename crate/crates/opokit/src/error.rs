//! Crate-wide error type.
//!
//! Errors are split into two broad classes that the CLI maps onto exit
//! codes: input/validation problems (exit 1) and numerical failures
//! (exit 2).

use crate::fit::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input: bad spec fields, out-of-range arguments, malformed
    /// files, unknown config keys.
    #[error("validation: {0}")]
    Validation(String),

    /// Parse failure in a config or CSV file, with a 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A numerical routine failed to produce a meaningful answer
    /// (divergence, no guided mode, iteration limit).
    #[error("numerical: {0}")]
    Numerical(String),

    /// The least-squares loop hit its iteration limit. Carries the best
    /// parameters seen so far for diagnosis.
    #[error("fit did not converge after {iterations} iterations")]
    FitDidNotConverge {
        iterations: usize,
        best: Box<FitResult>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI reports for this error: 1 for validation and
    /// I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } | Error::Io(_) => 1,
            Error::Numerical(_) | Error::FitDidNotConverge { .. } => 2,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
