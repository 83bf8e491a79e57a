use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// Reproducibility record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every setting the run used, defaults included.
    pub full_config: BTreeMap<String, Value>,
    pub seed: u64,
    pub tool_version: String,
    /// File names relative to the output directory.
    pub output_files: Vec<String>,
    #[serde(default)]
    pub results: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            full_config: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_files: Vec::new(),
            results: BTreeMap::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.full_config.insert(key.to_string(), to_value(value));
        self
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.results.insert(key.to_string(), to_value(value));
        self
    }

    /// Pretty JSON with keys sorted at every level, newline terminated.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut s = serde_json::to_string_pretty(&value)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(text)?)
    }
}

fn to_value(v: impl Serialize) -> Value {
    // only plain data is recorded, which always serializes
    serde_json::to_value(v).expect("manifest values are plain data")
}

pub fn emit_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    std::fs::write(path, manifest.to_json()?)?;
    Ok(())
}
