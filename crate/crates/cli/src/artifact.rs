//! Content-addressed run directories.
//!
//! A run lives in `<root>/<command>-<digest>` where the digest covers the
//! command name, the resolved configuration and the hashes of every input
//! field, so rerunning an identical setup rewrites the same directory with
//! the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nls_core::{io, Field};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = "wnls";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const DIGEST_CHARS: usize = 16;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a field's canonical encoding (frequency view, time 0).
pub fn field_hash(field: &Field<f64>) -> String {
    sha256_hex(&io::encode_field(&field.frequency(), 0.0))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_sha256: String,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a [String],
}

pub struct RunDir {
    path: PathBuf,
    command: String,
    config_toml: String,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl RunDir {
    /// Creates the run directory and writes `config.toml`.
    pub fn create<C: Serialize>(
        root: &Path,
        command: &str,
        config: &C,
        inputs: BTreeMap<String, String>,
    ) -> Result<Self> {
        let config_toml = toml::to_string(config).map_err(|e| CliError::config(e.to_string()))?;
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update([0]);
        hasher.update(config_toml.as_bytes());
        for (name, hash) in &inputs {
            hasher.update([0]);
            hasher.update(name.as_bytes());
            hasher.update(hash.as_bytes());
        }
        let digest = hex::encode(hasher.finalize());
        let path = root.join(format!("{command}-{}", &digest[..DIGEST_CHARS]));
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        let mut run = Self { path, command: command.to_owned(), config_toml, inputs, outputs: Vec::new() };
        let text = run.config_toml.clone();
        run.write("config.toml", text)?;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let target = self.path.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&target, contents).map_err(|e| CliError::io(&target, e))?;
        self.outputs.push(name.to_owned());
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::config(e.to_string()))?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn write_field(&mut self, name: &str, field: &Field<f64>, time: f64) -> Result<()> {
        self.write(name, io::encode_field(field, time))
    }

    /// Records a file written by someone else (for example a solver checkpoint).
    pub fn record(&mut self, name: &str) {
        self.outputs.push(name.to_owned());
    }

    /// Writes `manifest.json`; call last.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.outputs.sort();
        self.outputs.dedup();
        let manifest = Manifest {
            tool: TOOL,
            version: VERSION,
            command: &self.command,
            config_sha256: sha256_hex(self.config_toml.as_bytes()),
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::config(e.to_string()))?;
        text.push('\n');
        let target = self.path.join("manifest.json");
        fs::write(&target, text).map_err(|e| CliError::io(&target, e))?;
        Ok(self.path)
    }
}
