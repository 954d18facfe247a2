//! Run manifests: settings, seed, versions and content hashes of every
//! input and output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    settings: &'a BTreeMap<String, String>,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot hash {}", path.display()))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Collects what a run read and wrote.
#[derive(Debug, Default)]
pub struct RunRecord {
    pub command: String,
    pub seed: Option<u64>,
    pub settings: BTreeMap<String, String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn has_outputs(&self) -> bool {
        !self.outputs.is_empty()
    }

    /// Writes `path`. Output paths are recorded relative to the manifest's
    /// directory when they live under it, so manifests are relocatable.
    pub fn write(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new(""));
        let entry = |p: &PathBuf, relative: bool| -> Result<FileEntry> {
            let shown = if relative {
                p.strip_prefix(base).unwrap_or(p)
            } else {
                p.as_path()
            };
            Ok(FileEntry {
                path: shown.to_string_lossy().replace('\\', "/"),
                sha256: sha256_file(p)?,
            })
        };
        let manifest = Manifest {
            tool: "ppdepth",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed: self.seed,
            settings: &self.settings,
            inputs: self.inputs.iter().map(|p| entry(p, false)).collect::<Result<_>>()?,
            outputs: self.outputs.iter().map(|p| entry(p, true)).collect::<Result<_>>()?,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }
}
