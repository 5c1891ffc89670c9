//! Run manifests. Every command writes `manifest.json` next to its outputs.
//! Nothing time- or host-dependent is recorded, so identical runs produce
//! identical manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const TOOL: &str = "rdseg";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the compact JSON serialisation of `config`.
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub files: Vec<FileDigest>,
    /// Command-specific notes such as fallbacks taken.
    pub extra: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("config serialises"))
}

impl Manifest {
    /// Hashes every listed output file (relative to `dir`).
    pub fn new(
        command: &str,
        seed: u64,
        config: &RunConfig,
        dir: &Path,
        files: &[String],
        extra: serde_json::Value,
    ) -> CliResult<Self> {
        let files = files
            .iter()
            .map(|f| Ok(FileDigest { path: f.clone(), sha256: sha256_hex(&std::fs::read(dir.join(f))?) }))
            .collect::<CliResult<_>>()?;
        Ok(Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config_hash: config_hash(config),
            seed,
            config: config.clone(),
            files,
            extra,
        })
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join(FILE_NAME), self)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| crate::error::CliError::Io(format!("{}: {e}", path.display())))
}
