use std::error::Error as _;
use std::fmt;

use hdadbin_core::Error as CoreError;
use hdadbin_nn::NnError;

/// Process exit codes.
pub mod code {
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const DIMENSIONS: u8 = 4;
    pub const FORMAT: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: code::USAGE,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self {
            code: code::IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::DimensionMismatch { .. } | CoreError::BlockCountMismatch { .. } => code::DIMENSIONS,
        CoreError::InvalidParams(_) => code::USAGE,
        CoreError::Io { .. } => code::IO,
        CoreError::Image { source, .. } if source.source().is_some_and(|s| s.is::<std::io::Error>()) => code::IO,
        CoreError::InvalidDimensions { .. }
        | CoreError::BufferLength { .. }
        | CoreError::InvalidCorrection { .. }
        | CoreError::Image { .. }
        | CoreError::Format { .. } => code::FORMAT,
        CoreError::Method(_) => code::FAILURE,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self {
            code: core_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        let code = match &e {
            NnError::Shape(_) => code::DIMENSIONS,
            NnError::Architecture(_) | NnError::Config(_) => code::USAGE,
            NnError::EmptyDataset => code::FAILURE,
            NnError::Io { .. } => code::IO,
            NnError::Format { .. } | NnError::Version { .. } | NnError::Fingerprint { .. } => code::FORMAT,
            NnError::Core(c) => core_code(c),
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
