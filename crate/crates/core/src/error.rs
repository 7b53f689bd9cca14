use std::path::PathBuf;

use diffnum::DiffError;
use thiserror::Error;

/// Broad failure class; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate record for frame {frame}, pedestrian {ped}")]
    DuplicateRecord {
        path: PathBuf,
        line: usize,
        frame: i64,
        ped: i64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("incompatible inputs: {0}")]
    Mismatch(String),

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error(transparent)]
    Numeric(#[from] DiffError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Usage,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DuplicateRecord { .. }
            | Error::EmptyDataset(_)
            | Error::Mismatch(_) => ErrorKind::Data,
            Error::Diverged { .. } => ErrorKind::Numeric,
            Error::Numeric(DiffError::NonFinite(_)) => ErrorKind::Numeric,
            Error::Numeric(_) => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
