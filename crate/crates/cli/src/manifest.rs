use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_FILE: &str = "config.toml";

/// Provenance record written next to every command's outputs. The
/// resolved configuration is stored beside it as `config.toml`, so
/// `--config <dir>/config.toml` reruns the command exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the resolved configuration TOML.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Output files relative to the manifest's directory.
    pub outputs: Vec<String>,
}

pub fn config_hash(config_toml: &str) -> String {
    Sha256::digest(config_toml.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunManifest {
    pub fn new(command: &str, config_toml: &str, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(config_toml),
            seeds,
            outputs: Vec::new(),
        }
    }

    /// Records `path` (inside `dir`) as an output and returns it.
    pub fn output(&mut self, dir: &Path, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        dir.join(name)
    }

    pub fn write(&self, dir: &Path, config_toml: &str) -> Result<(), CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", p.display()));
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let cfg = dir.join(CONFIG_FILE);
        std::fs::write(&cfg, config_toml).map_err(|e| io(&cfg, e))?;
        let text = toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))?;
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| io(&path, e))
    }
}
