use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{file_error, Result};
use crate::files::sha256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256(path)?,
        })
    }
}

/// Everything needed to rerun a command and check its outputs bit for bit.
/// Contains no clock readings, so reruns produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: Option<u64>,
    pub scale_days: Option<usize>,
    pub configs: Vec<FileDigest>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, scale_days: Option<usize>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            arguments: std::env::args().skip(1).collect(),
            seed,
            scale_days,
            configs: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn configs(mut self, paths: &[PathBuf]) -> Result<Self> {
        self.configs = digests(paths)?;
        Ok(self)
    }

    pub fn inputs(mut self, paths: &[PathBuf]) -> Result<Self> {
        self.inputs = digests(paths)?;
        Ok(self)
    }

    pub fn outputs(mut self, paths: &[PathBuf]) -> Result<Self> {
        self.outputs = digests(paths)?;
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(file_error(path))
    }
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    paths.iter().map(|p| FileDigest::of(p)).collect()
}
