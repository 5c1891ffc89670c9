use std::path::Path;

use crate::error::{CliError, CliResult};

pub mod calibrate;
pub mod detect;
pub mod estimate;
pub mod eval;
pub mod synth;

/// What a command produced: output files relative to the output directory
/// and command-specific manifest notes.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<String>,
    pub extra: serde_json::Value,
}

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::from(e).context(path.display()))
}

pub(crate) fn load_map(path: &Path) -> CliResult<rdseg_core::RdMap> {
    rdseg_core::rdm::load_rdm(path).map_err(|e| CliError::from(e).context(path.display()))
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
