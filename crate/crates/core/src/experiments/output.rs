//! Run directories: CSV tables, binary snapshots and the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::diagnostics::ledger::{EnergyLedger, LEDGER_COLUMNS};
use crate::error::{Error, Result};
use crate::grid::{FourierField, SpectralGrid};
use crate::noise::GENERATOR_ID;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SCHS";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";
pub const STATS_COLUMNS: [&str; 5] = ["functional", "t", "mean", "stderr", "n_samples"];

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Collects output files for one run directory.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    /// Creates `root`; an existing manifest is removed first so that a
    /// half-written rerun never looks complete.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        let m = root.join(MANIFEST_NAME);
        if m.exists() {
            fs::remove_file(m)?;
        }
        Ok(RunDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(())
    }

    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write_bytes(rel, out.as_bytes())
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn write_ledger(&mut self, rel: &str, ledger: &EnergyLedger) -> Result<()> {
        let rows = ledger.rows.iter().map(|r| r.values().iter().map(|v| fmt_f64(*v)).collect());
        self.write_csv(rel, &LEDGER_COLUMNS, rows)
    }

    pub fn write_snapshots(&mut self, states: &[FourierField]) -> Result<()> {
        for (k, u) in states.iter().enumerate() {
            self.write_bytes(&format!("fields/{k:04}.snap"), &encode_snapshot(u))?;
        }
        Ok(())
    }

    /// Hashes every file written so far and writes the manifest last, via a
    /// temporary file and a rename.
    pub fn finish(self, body: ManifestBody) -> Result<RunManifest> {
        let mut files = Vec::with_capacity(self.files.len());
        for rel in &self.files {
            let bytes = fs::read(self.root.join(rel))?;
            files.push(FileEntry { path: rel.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
        }
        let manifest = RunManifest {
            command: body.command,
            status: body.status,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            generator: GENERATOR_ID.to_string(),
            wall_clock_seconds: body.wall_clock_seconds,
            config: body.config,
            summary: body.summary,
            failures: body.failures,
            files,
        };
        let tmp = self.root.join(format!("{MANIFEST_NAME}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.root.join(MANIFEST_NAME))?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// At least one path blew up; statistics cover the survivors.
    PartialFailure,
    Blowup,
    ThresholdFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path_index: u64,
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Command-specific part of a manifest.
#[derive(Debug, Clone)]
pub struct ManifestBody {
    pub command: String,
    pub status: RunStatus,
    pub wall_clock_seconds: f64,
    pub config: Value,
    pub summary: Value,
    pub failures: Vec<PathFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub status: RunStatus,
    pub code_version: String,
    pub generator: String,
    pub wall_clock_seconds: f64,
    pub config: Value,
    pub summary: Value,
    pub failures: Vec<PathFailure>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files whose hash or size no longer matches, or that are missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatched: Vec<String>,
    pub missing: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty()
    }
}

pub fn verify_manifest(dir: &Path) -> Result<VerifyReport> {
    let manifest = RunManifest::load(dir)?;
    let mut report = VerifyReport::default();
    for entry in &manifest.files {
        report.checked += 1;
        match fs::read(dir.join(&entry.path)) {
            Ok(bytes) => {
                if bytes.len() as u64 != entry.bytes || sha256_hex(&bytes) != entry.sha256 {
                    report.mismatched.push(entry.path.clone());
                }
            }
            Err(_) => report.missing.push(entry.path.clone()),
        }
    }
    Ok(report)
}

pub fn encode_snapshot(u: &FourierField) -> Vec<u8> {
    let c = u.coeffs();
    let mut out = Vec::with_capacity(12 + 8 * c.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(u.n_modes() as u32).to_le_bytes());
    for v in c {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<FourierField> {
    let bad = |m: &str| Error::InvalidArgument(format!("snapshot: {m}"));
    if bytes.len() < 12 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("missing SCHS header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    if word(4) != SNAPSHOT_VERSION {
        return Err(bad(&format!("unsupported version {}", word(4))));
    }
    let n = word(8) as usize;
    let body = &bytes[12..];
    if body.len() != 8 * (2 * n + 1) {
        return Err(bad(&format!("expected {} coefficients, found {} bytes", 2 * n + 1, body.len())));
    }
    let coeffs = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let grid: Arc<SpectralGrid> = SpectralGrid::new(n);
    FourierField::from_coeffs(&grid, coeffs)
}
