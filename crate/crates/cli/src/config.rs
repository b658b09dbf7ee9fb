//! Flat `key = value` configuration files. Every key is optional; command
//! line flags take precedence over file values, which take precedence over
//! built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{code, CliError};

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub k: Option<f64>,
    pub window: Option<usize>,
    pub r: Option<f64>,
    pub mlt_window: Option<String>,
    pub max_iters: Option<usize>,
    pub ihegt_mean: Option<String>,
    pub cwmf_window: Option<usize>,
    pub cwmf_weight: Option<usize>,
    pub model: Option<PathBuf>,
    pub precision: Option<String>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub input_channels: Option<usize>,
    pub threads: Option<usize>,
    pub split: Option<String>,
    pub aggregation: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError {
            code: code::USAGE,
            message: format!("{}: {e}", path.display()),
        })
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
