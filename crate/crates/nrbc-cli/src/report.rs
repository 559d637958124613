//! CSV tables, gates and the run manifest.

use serde::Serialize;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Fixed 17-significant-digit scientific formatting.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Empty cell for missing values.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Table { name: name.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(&self.name);
        let mut f = io::BufWriter::new(fs::File::create(&path)?);
        writeln!(f, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(f, "{}", r.join(","))?;
        }
        f.flush()?;
        Ok(path)
    }
}

/// One pass/fail check `measured <= limit * scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub scaled_limit: f64,
    pub pass: bool,
}

impl Gate {
    pub fn new(name: impl Into<String>, measured: f64, limit: f64, scale: f64) -> Self {
        let scaled_limit = limit * scale;
        Gate { name: name.into(), measured, limit, scaled_limit, pass: measured <= scaled_limit }
    }
}

/// Everything an experiment produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub gates: Vec<Gate>,
    /// Informational values recorded in the manifest but not gated.
    pub notes: Vec<(String, f64)>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub nrbc_version: &'a str,
    pub config: &'a std::collections::BTreeMap<String, String>,
    pub threads: usize,
    pub parallel: bool,
    pub gate_scale: f64,
    pub outputs: Vec<String>,
    pub gates: &'a [Gate],
    pub notes: std::collections::BTreeMap<&'a str, f64>,
    pub pass: bool,
}

pub fn write_manifest(dir: &Path, m: &Manifest<'_>) -> io::Result<PathBuf> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(m).map_err(io::Error::other)?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for v in [0.1, -3.516167498630298e-3, 1.0 / 3.0, f64::MIN_POSITIVE, 1e300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn gate_scaling() {
        assert!(!Gate::new("a", 2e-8, 1e-8, 1.0).pass);
        assert!(Gate::new("a", 2e-8, 1e-8, 10.0).pass);
        assert!(!Gate::new("a", f64::NAN, 1e-8, 10.0).pass);
    }
}
