//! The single writer: every artifact goes through it and is recorded with
//! its SHA-256 in `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
/// Bumped when a CSV column or JSON schema changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub kind: String,
    pub seed: Option<u64>,
    pub converged: bool,
    /// The config that produced the artifacts, as TOML.
    pub config: Option<String>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

pub struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits: enough to round-trip any f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new(), warnings: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.to_string(), sha256: sha256_hex(data), bytes: data.len() as u64 });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.bytes(name, &text)
    }

    /// Numeric cells are formatted with [`num`]; others as given.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let data = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.bytes(name, &data)
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let m = message.into();
        eprintln!("warning: {m}");
        self.warnings.push(m);
    }

    pub fn finish(self, kind: &str, seed: Option<u64>, converged: bool, config: Option<String>) -> Result<Manifest> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.to_string(),
            seed,
            converged,
            config,
            warnings: self.warnings,
            artifacts: self.artifacts,
        };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

/// Artifacts whose hash no longer matches the file on disk.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        match fs::read(dir.join(&a.path)) {
            Ok(data) if sha256_hex(&data) == a.sha256 => {}
            _ => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}
