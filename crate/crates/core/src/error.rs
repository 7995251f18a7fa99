use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("system full: all {0} servers busy")]
    SystemFull(u32),

    #[error("action mismatch: recorded prev_action={recorded} but admission state says {actual}")]
    ActionMismatch { recorded: u8, actual: u8 },

    #[error("out-of-order record: expected index {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },

    #[error("empty history")]
    EmptyHistory,

    #[error("cannot couple systems: {0}")]
    Coupling(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParam(_) | Error::Config(_) | Error::Parse { .. } | Error::Domain(_)
        )
    }
}
