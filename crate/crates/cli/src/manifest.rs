//! Run manifests: the configuration, seed and code version that produced a
//! run directory, with a SHA-256 digest of every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    /// The effective configuration in TOML form.
    pub config: String,
    pub seed: u64,
    pub format: String,
    pub outputs: Vec<OutputDigest>,
    pub timing: Timing,
    /// Set when the run stopped early; the artifacts up to that point are
    /// kept.
    pub error: Option<String>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Digests of `files`, recorded relative to `root`.
pub fn digests(root: &Path, files: &[PathBuf]) -> CliResult<Vec<OutputDigest>> {
    files
        .iter()
        .map(|f| {
            let rel = f.strip_prefix(root).unwrap_or(f);
            Ok(OutputDigest {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: sha256_file(f)?,
            })
        })
        .collect()
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}
