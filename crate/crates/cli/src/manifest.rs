//! Run manifests: what was run, on which input, with which build.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub master_seed: u64,
    /// SHA-256 of the input instance bytes (of the written instance for `gen`).
    pub instance_sha256: String,
    pub tool_version: String,
    /// Present only with `--timing`, so manifests stay byte-identical across runs.
    pub elapsed_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<Value>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &impl Serialize,
        master_seed: u64,
        instance_bytes: &[u8],
        elapsed_ms: Option<f64>,
    ) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            master_seed,
            instance_sha256: hex::encode(Sha256::digest(instance_bytes)),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed_ms,
            extra: None,
        })
    }

    pub fn path_for(result: &Path) -> PathBuf {
        let mut name = result.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, result: &Path) -> Result<()> {
        let path = Self::path_for(result);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
