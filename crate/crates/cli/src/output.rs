//! Ordered table sink for CSV and JSON-lines output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(usize),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

/// Shortest decimal string that round-trips to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::I(v) => Value::from(*v),
            Cell::B(v) => Value::Bool(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::text).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let obj: Map<String, Value> = self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
            out.push_str(&Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv()),
            Format::Jsonl => fs::write(dir.join(format!("{}.jsonl", self.name)), self.to_jsonl()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_formatting() {
        for v in [0.1, 1.0 / 3.0, 1e-20, -2.5e300, 123456789.125] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.0), "1.0");
    }

    #[test]
    fn csv_and_jsonl() {
        let mut t = Table::new("demo", &["a", "b", "c"]);
        t.push(vec![0.5.into(), 3usize.into(), true.into()]);
        assert_eq!(t.to_csv(), "a,b,c\n0.5,3,true\n");
        assert_eq!(t.to_jsonl(), "{\"a\":0.5,\"b\":3,\"c\":true}\n");
    }
}
