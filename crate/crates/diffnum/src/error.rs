use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("parameter `{0}` already exists")]
    DuplicateParam(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("invalid MLP spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, DiffError>;

pub(crate) fn mismatch(op: &'static str, detail: impl Into<String>) -> DiffError {
    DiffError::ShapeMismatch {
        op,
        detail: detail.into(),
    }
}
