use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// A CSV file to be written: name, columns and already-formatted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key=value` lines specific to this table.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

/// Provenance written at the top of every file.
#[derive(Debug, Clone)]
pub struct RunInfo {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub restarts: usize,
}

pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_table(dir: &Path, info: &RunInfo, table: &Table) -> anyhow::Result<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "# tool=usris {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command={}", info.command)?;
    writeln!(out, "# config_sha256={}", info.config_sha256)?;
    writeln!(out, "# seed={}", info.seed)?;
    writeln!(out, "# restarts={}", info.restarts)?;
    for (k, v) in &table.notes {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}

/// Fixed-precision decimal so outputs are stable and readable.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Scientific notation for quantities spanning many decades.
pub fn sci(x: f64) -> String {
    format!("{x:.9e}")
}
