//! Subcommand implementations.

pub mod align;
pub mod budget;
pub mod fit_arch;
pub mod fit_field;
pub mod fit_spectrum;
pub mod report;
pub mod simulate;

use std::fs;
use std::path::Path;
use thiserror::Error;

use crate::{EXIT_CONVERGENCE, EXIT_INPUT_ERROR};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("fit did not converge: {0}")]
    Convergence(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT_ERROR,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
            CliError::Internal(_) => EXIT_INPUT_ERROR,
        }
    }
}

impl From<tmfield::dataset::DatasetError> for CliError {
    fn from(e: tmfield::dataset::DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let json =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(path, &json)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
