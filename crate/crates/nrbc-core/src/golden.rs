//! Published reference values (`data/golden.txt`), one record per table cell.
//!
//! Record grammar: `<table> key=value key=value ...`; `#` starts a comment.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

pub const SOURCE: &str = include_str!("../data/golden.txt");

/// One record of the golden-value file.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub table: String,
    pub fields: BTreeMap<String, String>,
}

impl Record {
    pub fn get(&self, key: &str) -> Result<f64> {
        let raw = self.fields.get(key).ok_or_else(|| Error::Config(format!("{} record lacks `{key}`", self.table)))?;
        raw.parse().map_err(|_| Error::Config(format!("{} record: `{key}={raw}` is not a number", self.table)))
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }
}

pub fn parse(source: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let table = parts.next().unwrap_or_default().to_string();
        let mut fields = BTreeMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Config(format!("golden line {}: `{p}` is not key=value", i + 1)))?;
            fields.insert(k.to_string(), v.to_string());
        }
        out.push(Record { table, fields });
    }
    Ok(out)
}

/// All records of `table` from the embedded file.
pub fn table(name: &str) -> Vec<Record> {
    parse(SOURCE).expect("embedded golden file parses").into_iter().filter(|r| r.table == name).collect()
}

/// `(n, t, sigma_n(t))` for the kernel sample table.
pub fn kernel_samples() -> Vec<(usize, f64, f64)> {
    table("table1")
        .iter()
        .map(|r| (r.get("n").unwrap() as usize, r.get("t").unwrap(), r.get("sigma").unwrap()))
        .collect()
}
