use std::path::PathBuf;

use thiserror::Error;

use crate::augment::AugmentError;
use crate::dataset::DatasetError;
use crate::decode::DecodeError;
use crate::eval::AlignmentError;
use crate::infer::VoteError;
use crate::loss::LossError;
use crate::model::MappingError;
use crate::order::OrderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Jsonl {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Vote(#[from] VoteError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad input files or configuration, as opposed to a
    /// bug or an unexpected runtime condition.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => matches!(
                source.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::InvalidData | std::io::ErrorKind::PermissionDenied
            ),
            Error::Decode(DecodeError::DeadEnd(_) | DecodeError::Rejected { .. }) => false,
            Error::Dataset(DatasetError::Io(_)) => false,
            _ => true,
        }
    }
}
