use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Written beside every command's outputs. Everything except `created`
/// determines the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<String>,
    pub settings: BTreeMap<String, String>,
    pub seed: u64,
    pub out_dir: String,
    pub outputs: Vec<String>,
    pub created: String,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[&Path], settings: BTreeMap<String, String>, seed: u64, out_dir: &Path) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            settings,
            seed,
            out_dir: out_dir.display().to_string(),
            outputs: Vec::new(),
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        let name = path.file_name().map(PathBuf::from).unwrap_or_else(|| path.to_path_buf());
        self.outputs.push(name.display().to_string());
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = Path::new(&self.out_dir).join(MANIFEST_FILE);
        io::save_toml(self, &path)?;
        Ok(path)
    }
}
