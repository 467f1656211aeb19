//! Run manifests and output helpers.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Hash of `bytes` as a git blob object, with SHA-256.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub preset: String,
    pub output_dir: String,
    /// Hash over the resolved settings and every input file.
    pub input_hash: String,
    /// Fully resolved parameters of the run.
    pub settings: Value,
    pub inputs: Vec<InputFile>,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
}

/// Collects what a command reads and writes.
pub struct Run {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub preset: String,
    pub out: PathBuf,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<String>,
}

impl Run {
    pub fn new(command: &str, config_path: Option<&Path>, seed: u64, preset: &str, out: PathBuf) -> Self {
        Run {
            command: command.to_owned(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            preset: preset.to_owned(),
            out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputFile {
            path: path.display().to_string(),
            hash: blob_hash(bytes),
        });
    }

    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.input(path, &bytes);
        Ok(bytes)
    }

    pub fn create_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_owned());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Writes the manifest last so that it lists every output.
    pub fn finish(self, settings: Value) -> Result<RunManifest> {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update([0]);
        h.update(serde_json::to_vec(&settings)?);
        for f in &self.inputs {
            h.update([0]);
            h.update(f.hash.as_bytes());
        }
        let manifest = RunManifest {
            command: self.command,
            config_path: self.config_path.map(|p| p.display().to_string()),
            seed: self.seed,
            preset: self.preset,
            output_dir: self.out.display().to_string(),
            input_hash: hex::encode(h.finalize()),
            settings,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out.join(MANIFEST_FILE);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(manifest)
    }
}
