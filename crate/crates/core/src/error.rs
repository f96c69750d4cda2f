use std::path::PathBuf;

/// Errors raised by the hedging library and its command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("second derivative of the potential is undefined at x = 0")]
    UndefinedPoint,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("gain {value} for action {index} is outside [-1, 1]")]
    GainOutOfRange { index: usize, value: f64 },

    #[error("every expert abstained (total confidence mass is zero)")]
    AllAbstain,

    #[error("every candidate in the bank has zero likelihood")]
    DegenerateBank,

    #[error("script has {rows} rows, iteration {iteration} requested")]
    ScriptExhausted { iteration: usize, rows: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
