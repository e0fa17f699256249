//! Tabular output: CSV with a `#!` metadata header, or a JSON document.
//!
//! Floats are written as `{:.16e}` (17 significant digits, `.` separator,
//! exponent without padding), which round-trips every f64 and does not
//! depend on locale. Non-finite values appear as `NaN`/`inf` in CSV and
//! `null` in JSON.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> f64 {
        match self {
            Cell::Int(i) => *i as f64,
            Cell::Float(v) => *v,
            Cell::Bool(b) => f64::from(u8::from(*b)),
            Cell::Text(_) => f64::NAN,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) => Value::Null,
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    /// Metadata and echoed configuration, in header order.
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.header {
            writeln!(s, "#! {k} = {v}").unwrap();
        }
        for (k, v) in &self.summary {
            writeln!(s, "#! summary.{k} = {}", v.csv()).unwrap();
        }
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::csv).collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut meta = Map::new();
        let mut config = Map::new();
        for (k, v) in &self.header {
            match k.strip_prefix("meta.") {
                Some(m) => meta.insert(m.to_string(), json!(v)),
                None => config.insert(k.clone(), json!(v)),
            };
        }
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "meta": meta,
            "config": config,
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_csv() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5] {
            let s = Cell::Float(v).csv();
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(Cell::Float(100.0).csv(), "1.0000000000000000e2");
    }

    #[test]
    fn json_nulls_non_finite() {
        assert_eq!(Cell::Float(f64::NAN).json(), Value::Null);
    }
}
