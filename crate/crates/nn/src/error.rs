use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a model file ({message})")]
    Format { path: PathBuf, message: String },
    #[error("{path}: unsupported model format version {found} (expected {expected})")]
    Version { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: architecture fingerprint mismatch")]
    Fingerprint { path: PathBuf },
    #[error(transparent)]
    Core(#[from] hdadbin_core::Error),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;
