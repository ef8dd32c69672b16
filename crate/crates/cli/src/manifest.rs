//! Output directory bookkeeping and `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<FileEntry>,
    pub stages: Vec<Stage>,
}

impl RunManifest {
    pub fn checksum(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.sha256.as_str())
    }
}

/// Writes result files into one directory and records their checksums.
pub struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
    stages: Vec<Stage>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            stages: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex(&Sha256::digest(contents.as_bytes())),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    /// Time `f` and log one line to stderr.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.record(name, start);
        Ok(out)
    }

    pub fn record(&mut self, name: &str, start: Instant) {
        let seconds = start.elapsed().as_secs_f64();
        eprintln!("[fireline] {name}: {seconds:.3} s");
        self.stages.push(Stage {
            name: name.to_string(),
            seconds,
        });
    }

    pub fn finish(mut self, command: &str, config_hash: String, seed: u64) -> Result<RunManifest> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed,
            files: self.files,
            stages: self.stages,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
