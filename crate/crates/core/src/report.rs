//! Experiment reports: a header, a table of rows, and summary values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    /// Value undefined for this row (reported as `skipped`).
    Skipped,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{x:e}"),
            Cell::Text(s) => write!(f, "{s}"),
            Cell::Skipped => write!(f, "skipped"),
        }
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Skipped => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Cell {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Cell {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Cell {
        Cell::Text(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub header: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, Value>,
}

impl ExperimentReport {
    pub fn new(name: &str, columns: &[&str]) -> ExperimentReport {
        ExperimentReport {
            name: name.to_string(),
            header: BTreeMap::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }

    pub fn meta(&mut self, key: &str, v: impl ToString) {
        self.header.insert(key.to_string(), v.to_string());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column (non-numeric cells become NaN).
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(i) => self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(|v| v.as_f64())
    }

    /// Comma-separated, header row, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.to_string())).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.clone(), v.to_json()))
                    .collect();
                Value::Object(m)
            })
            .collect();
        json!({
            "experiment": self.name,
            "header": self.header,
            "summary": self.summary,
            "rows": rows,
        })
    }

    /// Writes `<name>.csv` and `<name>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.name));
        let json_path = dir.join(format!("{}.json", self.name));
        std::fs::write(&csv_path, self.to_csv())?;
        let text = serde_json::to_string_pretty(&self.to_json()).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&json_path, text + "\n")?;
        Ok((csv_path, json_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_dialect() {
        let mut r = ExperimentReport::new("demo", &["K", "sample", "ratio"]);
        r.push(vec![4u32.into(), 0usize.into(), 0.5.into()]);
        r.push(vec![8u32.into(), 1usize.into(), Cell::Skipped]);
        let s = r.to_csv();
        assert_eq!(s, "K,sample,ratio\n4,0,5e-1\n8,1,skipped\n");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn float_cells_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            let s = Cell::Float(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn json_contains_summary_and_rows() {
        let mut r = ExperimentReport::new("demo", &["n"]);
        r.push(vec![1usize.into()]);
        r.set("max", 2.5);
        r.meta("seed", 7);
        let v = r.to_json();
        assert_eq!(v["summary"]["max"], json!(2.5));
        assert_eq!(v["header"]["seed"], json!("7"));
        assert_eq!(v["rows"][0]["n"], json!(1));
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = ExperimentReport::new("w", &["a"]);
        r.push(vec![1.5.into()]);
        let (c, j) = r.write(dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(c).unwrap(), "a\n1.5e0\n");
        assert!(std::fs::read_to_string(j).unwrap().contains("\"experiment\": \"w\""));
    }
}
