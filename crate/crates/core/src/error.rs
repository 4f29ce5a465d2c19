use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Array length or grid disagreement between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A precondition of an operator does not hold, e.g. a vertical primitive
    /// requested for a field with a nonzero vertical mean.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Half-domain data that cannot be extended into the periodic parity class.
    #[error("incompatible initial data: {0}")]
    Incompatible(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// The solution left the admissible range (NaN or a norm above the
    /// blow-up threshold). `time` is the last time with a valid state.
    #[error("blow-up detected after t = {time}")]
    BlowUp { time: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot integrity error: {0}")]
    Integrity(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } => 3,
            Error::Io { .. } | Error::Csv(_) | Error::Integrity(_) => 4,
            _ => 2,
        }
    }
}
