//! Per-stage manifests: what ran, with which settings, on which inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    /// Snapshot of the full pipeline config.
    pub config: serde_json::Value,
    /// Path → sha256 of every file read.
    pub inputs: BTreeMap<String, String>,
    /// File name (relative to the stage directory) → sha256.
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::Missing {
        what: "file".into(),
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(stage: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), PipelineError> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, dir: &Path, name: &str) -> Result<(), PipelineError> {
        self.outputs.insert(name.to_string(), sha256_file(&dir.join(name))?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(&path, text + "\n").map_err(|e| PipelineError::Io {
            path,
            message: e.to_string(),
        })
    }

    /// Reads the manifest of an upstream stage directory.
    pub fn read(dir: &Path, stage: &str) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let missing = |message: String| PipelineError::Missing {
            what: format!("{stage} stage output (run `{stage}` first)"),
            path: path.clone(),
            message,
        };
        let text = std::fs::read_to_string(&path).map_err(|e| missing(e.to_string()))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| missing(format!("unreadable manifest: {e}")))?;
        if m.stage != stage {
            return Err(missing(format!("manifest belongs to stage {:?}", m.stage)));
        }
        Ok(m)
    }

    /// Confirms every recorded output still has its recorded hash and
    /// returns its path.
    pub fn verified_output(&self, dir: &Path, name: &str) -> Result<PathBuf, PipelineError> {
        let path = dir.join(name);
        let expected = self.outputs.get(name).ok_or_else(|| PipelineError::Missing {
            what: format!("{} output {name}", self.stage),
            path: path.clone(),
            message: "not listed in the manifest".into(),
        })?;
        let found = sha256_file(&path)?;
        if &found != expected {
            return Err(PipelineError::HashMismatch {
                path,
                expected: expected.clone(),
                found,
            });
        }
        Ok(path)
    }
}
