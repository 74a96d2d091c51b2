//! Per-run output directories and manifests.
//!
//! A run directory is named `<config hash>-s<seed>` and holds the command's
//! artifacts plus `manifest.json`: the resolved config, the seed and a SHA-256
//! checksum of every artifact. Passing the manifest back as `--config`
//! replays the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    /// File name -> hex SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// First 12 hex digits of the SHA-256 of the config's JSON form.
pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    sha256_hex(json.as_bytes())[..12].to_string()
}

pub fn run_dir_name(command: &str, cfg: &RunConfig) -> String {
    format!("{command}-{}-s{}", config_hash(cfg), cfg.seed)
}

/// Collects artifacts for one command and writes them with a manifest.
pub struct RunDir {
    dir: PathBuf,
    command: String,
    config: RunConfig,
    artifacts: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(out_root: &Path, command: &str, config: &RunConfig) -> Result<Self, CliError> {
        let dir = out_root.join(run_dir_name(command, config));
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            command: command.to_string(),
            config: config.clone(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.artifacts
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    pub fn finish(self) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            command: self.command,
            seed: self.config.seed,
            config: self.config,
            artifacts: self.artifacts,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
