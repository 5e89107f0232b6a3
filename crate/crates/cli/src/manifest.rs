//! Run manifests and output-directory locking.
//!
//! Every subcommand writes `<name>_manifest.json` recording the tool
//! version, dataset format version, full argument set, seed, tolerance
//! profile, input paths with SHA-256 digests, and produced outputs.
//! A lock file serializes concurrent runs into the same directory.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::commands::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub dataset_format: &'static str,
    pub subcommand: String,
    pub arguments: serde_json::Value,
    pub seed: Option<u64>,
    pub tolerance_profile: Option<String>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, arguments: serde_json::Value) -> Self {
        Self {
            tool: "tmfield",
            tool_version: env!("CARGO_PKG_VERSION"),
            dataset_format: tmfield::dataset::FORMAT_VERSION,
            subcommand: subcommand.to_string(),
            arguments,
            seed: None,
            tolerance_profile: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{digest:x}"),
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let path = out_dir.join(format!("{}_manifest.json", self.subcommand.replace('-', "_")));
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(&path, json)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(())
    }
}

/// Exclusive lock on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
        let path = out_dir.join(".tmfield.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Input(
                format!(
                    "output directory {} is locked by another run (remove {} if stale)",
                    out_dir.display(),
                    path.display()
                ),
            )),
            Err(e) => Err(CliError::Input(format!("{}: {e}", path.display()))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
