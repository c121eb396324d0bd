use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("nifti header field `{field}`: {reason}")]
    Nifti { field: &'static str, reason: String },

    #[error("volume dimension {dim} exceeds the 16-bit nifti-1 limit of 32767")]
    DimsOverflow { dim: usize },

    #[error("mask volume contains value {value} outside {{0, 1}}")]
    NotBinary { value: u8 },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain too small for root radius")]
    DomainTooSmall,

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("generation: {0}")]
    Generation(String),

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("image encoding: {0}")]
    Image(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
