//! Report emission: CSV tables and JSON documents stamped with provenance.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "comp-market";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stamp carried by every emitted file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    /// SHA-256 of the resolved input, serialized as compact JSON.
    pub config_sha256: String,
}

impl Provenance {
    pub fn new<T: Serialize>(command: &'static str, seed: Option<u64>, config: &T) -> CliResult<Self> {
        Ok(Self { tool: TOOL, version: VERSION, command, seed, config_sha256: config_hash(config)? })
    }

    fn comment_lines(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# tool: {} {}\n# command: {}\n# seed: {}\n# config_sha256: {}\n",
            self.tool, self.version, self.command, seed, self.config_sha256
        )
    }
}

pub fn config_hash<T: Serialize>(config: &T) -> CliResult<String> {
    let bytes = serde_json::to_vec(config).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Shortest round-trip form of a float.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), num)
}

/// A CSV table that always has a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, provenance: &Provenance) -> CliResult<Vec<u8>> {
        let mut out = provenance.comment_lines().into_bytes();
        {
            let mut w =
                csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            let to_err = |e: csv::Error| CliError::Config(e.to_string());
            w.write_record(&self.header).map_err(to_err)?;
            for row in &self.rows {
                w.write_record(row).map_err(to_err)?;
            }
            w.flush().map_err(|e| CliError::io("<csv buffer>", e))?;
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a `provenance` field next to the body's own fields.
pub fn json_document<T: Serialize>(provenance: &Provenance, body: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Document { provenance, body })
        .map_err(|e| CliError::Config(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, creating parent directories, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            fs::write(path, bytes).map_err(|e| CliError::io(path, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

/// `run.csv` with suffix `summary.json` becomes `run.summary.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
