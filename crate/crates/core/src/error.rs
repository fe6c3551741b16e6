use thiserror::Error;

/// Errors raised by the library and surfaced by the CLI with distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "cross terms non-negligible: branch pair ({0}, {1}) has damping factor {2:e} above the \
         neglect threshold; use the exact pointwise evaluator with importance weighting"
    )]
    CrossTermsNonNegligible(usize, usize, f64),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::Usage(_)
            | Error::Unsupported(_)
            | Error::CrossTermsNonNegligible(..)
            | Error::Io(_) => 2,
            Error::Resource(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
