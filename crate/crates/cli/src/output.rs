//! Byte-stable CSV and JSON tables. Numbers are written in scientific
//! notation with 17 significant digits.

use crate::config::Format;
use crate::error::{CliError, CliResult};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// A table with unit-bearing column names and optional leading metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| Cell::Num(*v)).collect());
    }

    /// Metadata lines start with `#`; then the header row and the data.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {}", csv_cell(v));
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(csv_cell).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// `{"metadata": {...}, "columns": [...], "rows": [[...], ...]}`.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"metadata\": {");
        for (i, (k, v)) in self.metadata.iter().enumerate() {
            let sep = if i == 0 { "" } else { "," };
            let _ = write!(out, "{sep}\n    {}: {}", json_str(k), json_cell(v));
        }
        out.push_str(if self.metadata.is_empty() { "},\n" } else { "\n  },\n" });
        let cols: Vec<String> = self.columns.iter().map(|c| json_str(c)).collect();
        let _ = writeln!(out, "  \"columns\": [{}],", cols.join(", "));
        out.push_str("  \"rows\": [");
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(json_cell).collect();
            let sep = if i == 0 { "" } else { "," };
            let _ = write!(out, "{sep}\n    [{}]", cells.join(", "));
        }
        out.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes `<dir>/<stem>.<csv|json>` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> CliResult<PathBuf> {
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = dir.join(format!("{stem}.{ext}"));
        write_file(&path, &self.render(format))?;
        Ok(path)
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => fmt_num(*v),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_str(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) if v.is_finite() => fmt_num(*v),
        Cell::Num(_) => "null".to_string(),
        Cell::Text(s) => json_str(s),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
