//! CSV tables. Every row ends with the config hash; floats carry 17
//! significant digits so that a table round-trips exactly.

use std::io::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub hash: String,
}

impl Table {
    pub fn new(header: &[&'static str], hash: &str) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
            hash: hash.to_string(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Index of column `name`.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.header.clone();
        header.push("config_hash");
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record: Vec<String> = row.iter().map(Cell::render).collect();
            record.push(self.hash.clone());
            w.write_record(&record)?;
        }
        w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
    }

    /// Writes the table to `out`, or to stdout when `out` is `None`. The
    /// table is rendered in full before the file is created.
    pub fn write(&self, out: Option<&Path>) -> Result<()> {
        let bytes = self.to_csv()?;
        let (path, written) = match out {
            Some(path) => (path, std::fs::write(path, bytes)),
            None => (Path::new("<stdout>"), std::io::stdout().write_all(&bytes)),
        };
        written.map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
