//! Report tables, replay records and atomic file output.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use qaw_core::linalg::Vector;
use qaw_core::C64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Fixed 15-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn flag(ok: bool) -> String {
    if ok { "true" } else { "false" }.to_string()
}

pub fn vector_json(v: &Vector<C64>) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

/// One CSV file: header, rows in a stable order, and a trailing `# summary` block.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn render(&self, config_hash: &str, seed: u64) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let mut out = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        writeln!(out, "# summary")?;
        writeln!(out, "# config_hash,{config_hash}")?;
        writeln!(out, "# seed,{seed}")?;
        writeln!(out, "# rows,{}", self.rows.len())?;
        for (k, v) in &self.summary {
            writeln!(out, "# {k},{v}")?;
        }
        Ok(out)
    }
}

/// A violated invariant with enough data to rerun the failing case alone.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub experiment: String,
    pub invariant: String,
    pub detail: String,
    pub replay: Value,
}

#[derive(Clone, Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub failures: Vec<Failure>,
}

impl Output {
    pub fn fail(&mut self, experiment: &str, invariant: &str, detail: String, replay: Value) {
        self.failures.push(Failure {
            experiment: experiment.to_string(),
            invariant: invariant.to_string(),
            detail,
            replay,
        });
    }
}

/// Writes to a sibling temporary file first, so readers never see a partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
