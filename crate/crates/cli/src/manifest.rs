use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::Internal;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Record of one subcommand run: what was read, with which settings, and
/// what was written. Contains no timestamps or machine-specific values so
/// identical runs give identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub inputs: Vec<FileHash>,
    pub config: Map<String, Value>,
    pub counts: Map<String, Value>,
    pub outputs: Vec<FileHash>,
}

/// Collects outputs for one run and writes the manifest last.
pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn new(subcommand: &str, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| {
            Internal(format!(
                "cannot create output directory {}: {e}",
                dir.display()
            ))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                tool: "pivotscope",
                version: env!("CARGO_PKG_VERSION"),
                subcommand: subcommand.to_string(),
                inputs: Vec::new(),
                config: Map::new(),
                counts: Map::new(),
                outputs: Vec::new(),
            },
        })
    }

    /// Reads an input file, recording its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.note_input(path, &bytes);
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8 text", path.display()))
    }

    pub fn note_input(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest.inputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn config<V: Into<Value>>(&mut self, key: &str, value: V) {
        self.manifest.config.insert(key.to_string(), value.into());
    }

    pub fn count<V: Into<Value>>(&mut self, key: &str, value: V) {
        self.manifest.counts.insert(key.to_string(), value.into());
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Internal(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.outputs.push(FileHash {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Internal(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text)
            .map_err(|e| Internal(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
