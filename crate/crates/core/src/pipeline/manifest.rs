//! Per-run provenance manifests.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub index: usize,
    pub name: String,
    pub operation: String,
    pub inputs: Vec<String>,
    pub output: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

/// Structured record of one run: command, effective parameters, stages and
/// hashes of every file read or written.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub stages: Vec<StageRecord>,
    /// Outcome metrics of the run, such as data terms and far-field figures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<serde_json::Value>,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, parameters: serde_json::Value) -> Self {
        Self {
            tool: "morpho".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            stages: Vec::new(),
            results: None,
            files: Vec::new(),
        }
    }

    /// Records `path` under `role` with the SHA-256 of its current contents.
    pub fn add_file(&mut self, role: impl Into<String>, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        self.files.push(FileRecord {
            role: role.into(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
