//! Result tables: named columns, a JSON metadata header, CSV serialization.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{}", format_float(*x)),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    /// Table-specific metadata merged into the header.
    pub extra: serde_json::Map<String, Value>,
}

impl ResultTable {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            extra: Default::default(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the column count of {}", self.name);
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float view of one column (`NaN` for non-numeric cells).
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(k) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .map(|r| match &r[k] {
                Cell::Float(x) => *x,
                Cell::Int(i) => *i as f64,
                Cell::Text(_) => f64::NAN,
            })
            .collect()
    }

    /// Writes `#<metadata JSON>` followed by the CSV header and rows.
    pub fn write_csv(&self, out: &mut impl Write, metadata: &Value) -> Result<()> {
        let mut meta = metadata.clone();
        if let Value::Object(map) = &mut meta {
            map.insert("table".into(), Value::String(self.name.clone()));
            map.insert("columns".into(), Value::from(self.columns.clone()));
            map.insert("rows".into(), Value::from(self.rows.len()));
            for (k, v) in &self.extra {
                map.insert(k.clone(), v.clone());
            }
        }
        let io = |e: std::io::Error| HarnessError::Io { path: self.name.clone(), source: e };
        writeln!(out, "#{}", serde_json::to_string(&meta).expect("metadata serializes")).map_err(io)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let csv_err = |e: csv::Error| HarnessError::Io {
            path: self.name.clone(),
            source: std::io::Error::other(e.to_string()),
        };
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_string)).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path, metadata: &Value) -> Result<()> {
        let io = |e: std::io::Error| HarnessError::Io { path: path.display().to_string(), source: e };
        let mut buf = Vec::new();
        self.write_csv(&mut buf, metadata)?;
        std::fs::write(path, buf).map_err(io)
    }
}
