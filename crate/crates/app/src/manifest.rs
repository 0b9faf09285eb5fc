//! Run manifests and the output directory writer.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> AppResult<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub psnr_noisy: Option<f64>,
    pub psnr_restored: Option<f64>,
    /// Table holding the energy curve, relative to the output directory.
    pub energy_curve: Option<String>,
    pub gamma_star: Option<f64>,
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Every config key in effect, defaults included.
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    /// Output paths are relative to the output directory.
    pub outputs: Vec<FileDigest>,
    /// The only field that differs between identical runs.
    pub wall_clock_seconds: f64,
    pub summary: Summary,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            summary: Summary::default(),
        }
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Single writer for one output directory; records a digest per file.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> AppResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> AppResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| AppError::io(&path, e))?;
        self.written.push(FileDigest { path: name.into(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Writes `manifest.json` with the recorded outputs.
    pub fn finish(self, mut manifest: RunManifest) -> AppResult<RunManifest> {
        manifest.outputs = self.written;
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| AppError::io(&path, e))?;
        Ok(manifest)
    }
}
