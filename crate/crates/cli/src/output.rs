//! Atomic file output, run manifests and the error report printed on failure.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Failure raised by the driver itself rather than the library.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// `{"error":{"kind":..,"message":..}}` for the first recognised error in the chain.
pub fn error_json(err: &anyhow::Error) -> String {
    let kind = err
        .chain()
        .find_map(|e| {
            e.downcast_ref::<reuseplan::Error>()
                .map(|e| e.kind())
                .or_else(|| e.downcast_ref::<CliError>().map(|e| e.kind))
                .or_else(|| e.downcast_ref::<std::io::Error>().map(|_| "io"))
                .or_else(|| e.downcast_ref::<serde_json::Error>().map(|_| "malformed"))
        })
        .unwrap_or("internal");
    let message = err.chain().map(ToString::to_string).collect::<Vec<_>>().join(": ");
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<Vec<u8>> {
    let bytes = to_json(value)?;
    write_atomic(path, &bytes)?;
    Ok(bytes)
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and get the same bytes back. Wall-clock timings go to
/// a separate `.timing.json` file so the manifest itself stays reproducible.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seeds: Value,
    pub settings: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seeds: Value::Object(Default::default()),
            settings: Value::Object(Default::default()),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &str, seed: u64) -> Self {
        self.seeds[name] = seed.into();
        self
    }

    pub fn settings(mut self, settings: Value) -> Self {
        self.settings = settings;
        self
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileDigest {
            file: file_name(path),
            sha256: sha256_hex(bytes),
        });
    }

    /// Input taken from the bundled reference files rather than disk.
    pub fn bundled(&mut self, name: &str, text: &str) {
        self.inputs.push(FileDigest {
            file: format!("bundled:{name}"),
            sha256: sha256_hex(text.as_bytes()),
        });
    }

    pub fn output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(FileDigest {
            file: file_name(path),
            sha256: sha256_hex(bytes),
        });
    }

    /// Writes `<out>.manifest.json` next to the main output.
    pub fn write(&self, out: &Path) -> Result<()> {
        write_json(&sidecar(out, ".manifest.json"), self)?;
        Ok(())
    }
}

pub fn write_timing(out: &Path, timing: Value) -> Result<()> {
    write_json(&sidecar(out, ".timing.json"), &timing)?;
    Ok(())
}
