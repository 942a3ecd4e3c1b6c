//! Column-oriented sweep output and its CSV form.
//!
//! CSV layout: `# key: value` metadata lines (sorted by key), one header row,
//! then data rows. Floats are written with 17 significant digits so a file
//! round-trips every value bit-for-bit. Lines end in `\n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Float(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Float(v) => v.len(),
            ColumnData::Int(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self, row: usize) -> String {
        match self {
            ColumnData::Float(v) => format_float(v[row]),
            ColumnData::Int(v) => v[row].to_string(),
            ColumnData::Text(v) => quote(&v[row]),
        }
    }
}

/// A named series; the name carries its unit suffix (`gain_dB`, `bias_A`).
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub columns: Vec<Column>,
    pub metadata: BTreeMap<String, String>,
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SweepResult {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    /// Appends a column; its length must match the existing ones.
    pub fn push(&mut self, name: impl Into<String>, data: ColumnData) -> Result<&mut Self> {
        let name = name.into();
        if let Some(first) = self.columns.first() {
            let expected = first.data.len();
            if data.len() != expected {
                return Err(Error::ColumnLength {
                    column: name,
                    len: data.len(),
                    expected,
                });
            }
        }
        self.columns.push(Column { name, data });
        Ok(self)
    }

    pub fn push_floats(&mut self, name: impl Into<String>, v: Vec<f64>) -> Result<&mut Self> {
        self.push(name, ColumnData::Float(v))
    }

    pub fn push_text(&mut self, name: impl Into<String>, v: Vec<String>) -> Result<&mut Self> {
        self.push(name, ColumnData::Text(v))
    }

    pub fn push_ints(&mut self, name: impl Into<String>, v: Vec<i64>) -> Result<&mut Self> {
        self.push(name, ColumnData::Int(v))
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn set_meta_float(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.metadata.insert(key.into(), format_float(value));
        self
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn floats(&self, name: &str) -> Option<&[f64]> {
        match &self.column(name)?.data {
            ColumnData::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn texts(&self, name: &str) -> Option<&[String]> {
        match &self.column(name)?.data {
            ColumnData::Text(v) => Some(v),
            _ => None,
        }
    }

    /// Appends the rows of `other`, which must have identical column names
    /// and kinds.
    pub fn extend(&mut self, other: SweepResult) -> Result<()> {
        if self.columns.is_empty() {
            self.columns = other.columns;
            return Ok(());
        }
        if self.columns.len() != other.columns.len() {
            return Err(Error::ColumnLength {
                column: "<column count>".into(),
                len: other.columns.len(),
                expected: self.columns.len(),
            });
        }
        for (mine, theirs) in self.columns.iter_mut().zip(other.columns) {
            match (&mut mine.data, theirs.data) {
                (ColumnData::Float(a), ColumnData::Float(b)) if mine.name == theirs.name => {
                    a.extend(b)
                }
                (ColumnData::Int(a), ColumnData::Int(b)) if mine.name == theirs.name => a.extend(b),
                (ColumnData::Text(a), ColumnData::Text(b)) if mine.name == theirs.name => {
                    a.extend(b)
                }
                _ => {
                    return Err(Error::ColumnLength {
                        column: theirs.name,
                        len: 0,
                        expected: 0,
                    })
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {}", v.replace('\n', " "));
        }
        let header: Vec<String> = self.columns.iter().map(|c| quote(&c.name)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in 0..self.rows() {
            let cells: Vec<String> = self.columns.iter().map(|c| c.data.cell(row)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
