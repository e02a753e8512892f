//! Deterministic CSV output: `#` metadata lines, one column-name row, then
//! data rows. Floats are written as `{:.16e}` (17 significant digits).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Self::Empty, Into::into)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn render(cell: &Cell, out: &mut String) {
    match cell {
        Cell::Float(v) => out.push_str(&format_float(*v)),
        Cell::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Cell::Text(s) if s.contains([',', '"', '\n']) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\"").replace('\n', " "));
            out.push('"');
        }
        Cell::Text(s) => out.push_str(s),
        Cell::Empty => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata lines specific to this table.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }
}

/// Metadata shared by every file of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub lines: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> CliResult<Self> {
        Ok(Self {
            command: command.into(),
            config_hash: config_hash(config)?,
            lines: Vec::new(),
        })
    }

    pub fn line(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }
}

/// SHA-256 of the canonical serialization, so formatting and comments in the
/// source file do not change it.
pub fn config_hash(config: &RunConfig) -> CliResult<String> {
    let canonical = config.to_toml()?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

pub fn render_table(provenance: &Provenance, table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# skinlab {VERSION}");
    let _ = writeln!(out, "# command: {}", provenance.command);
    let _ = writeln!(out, "# config_sha256: {}", provenance.config_hash);
    for (k, v) in provenance.lines.iter().chain(&table.notes) {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            render(cell, &mut out);
        }
        out.push('\n');
    }
    out
}

pub fn write_table(dir: &Path, provenance: &Provenance, table: &Table) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(format!("{}.csv", table.name));
    fs::write(&path, render_table(provenance, table)).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
