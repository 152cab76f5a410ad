use std::io::Write;

use serde_json::Value;

use crate::error::{Error, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Null,
}

impl Cell {
    /// CSV text. Finite floats use 17 significant digits so they parse back
    /// to the same value.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Float(v) if !v.is_finite() => Value::String(v.to_string()).to_string(),
            Cell::Int(_) | Cell::Float(_) => self.render(),
            Cell::Text(s) => Value::String(s.clone()).to_string(),
            Cell::Null => "null".to_string(),
        }
    }

    /// Inverse of [`Cell::render`]: a typed cell is accepted only when it
    /// renders back to the same text.
    fn parse(text: &str) -> Cell {
        if text.is_empty() {
            return Cell::Null;
        }
        let typed = match text.parse::<i64>() {
            Ok(v) => Some(Cell::Int(v)),
            Err(_) => text.parse::<f64>().ok().map(Cell::Float),
        };
        match typed {
            Some(cell) if cell.render() == text => cell,
            _ => Cell::Text(text.to_string()),
        }
    }

    fn from_json(value: &Value) -> Result<Cell> {
        Ok(match value {
            Value::Null => Cell::Null,
            Value::String(s) => Cell::Text(s.clone()),
            Value::Number(num) => match num.as_i64() {
                Some(v) => Cell::Int(v),
                None => Cell::Float(num.as_f64().ok_or_else(|| Error::Serialization(format!("bad number {num}")))?),
            },
            Value::Bool(b) => Cell::Text(b.to_string()),
            other => return Err(Error::Serialization(format!("nested value {other} in a flat record"))),
        })
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(i64::try_from(v).expect("value fits in i64"))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::from(v as u64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// A named table of flat records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Suffix after the experiment name in the file name; empty for the main
    /// table.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// RFC 4180 CSV with a header row.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        writer.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::render)).map_err(csv_error)?;
        }
        writer.into_inner().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_csv(name: &str, bytes: &[u8]) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let columns: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record.map_err(csv_error)?.iter().map(Cell::parse).collect());
        }
        Ok(Table {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    /// A JSON array of flat objects, one per row, keys in column order.
    pub fn to_json(&self) -> Vec<u8> {
        let keys: Vec<String> = self.columns.iter().map(|c| Value::String(c.clone()).to_string()).collect();
        let mut out = Vec::new();
        out.push(b'[');
        for (i, row) in self.rows.iter().enumerate() {
            out.extend_from_slice(if i == 0 { b"\n  {" } else { b",\n  {" });
            for (j, (key, cell)) in keys.iter().zip(row).enumerate() {
                if j > 0 {
                    out.extend_from_slice(b", ");
                }
                write!(out, "{key}: {}", cell.json()).expect("writing to a Vec");
            }
            out.push(b'}');
        }
        out.extend_from_slice(b"\n]\n");
        out
    }

    pub fn from_json(name: &str, bytes: &[u8]) -> Result<Table> {
        let records: Vec<serde_json::Map<String, Value>> =
            serde_json::from_slice(bytes).map_err(|e| Error::Serialization(e.to_string()))?;
        let columns: Vec<String> = records.first().map(|r| r.keys().cloned().collect()).unwrap_or_default();
        let mut rows = Vec::with_capacity(records.len());
        for record in &records {
            let keys: Vec<&String> = record.keys().collect();
            if keys.len() != columns.len() || keys.iter().zip(&columns).any(|(a, b)| *a != b) {
                return Err(Error::Serialization("records do not share one set of keys".into()));
            }
            rows.push(record.values().map(Cell::from_json).collect::<Result<_>>()?);
        }
        Ok(Table {
            name: name.to_string(),
            columns,
            rows,
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}
