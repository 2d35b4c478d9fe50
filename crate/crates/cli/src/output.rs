//! Tables with a metadata header, rendered as CSV or JSON.
//!
//! CSV: `#`-prefixed `key=value` metadata lines, then a header row, then
//! data rows. JSON: `{"schema", "meta", "columns", "rows"}` with one array
//! per row in column order. Both start with the schema tag [`SCHEMA`].

use serde_json::{json, Map, Value};

use crate::args::Format;

pub const SCHEMA: &str = "asep-table/1";

/// `git describe`-style identifier of the build, set by the build script.
pub const BUILD_ID: &str = env!("ASEP_BUILD_ID");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Shortest round-trip representation, in exponent form outside
/// `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // serde_json maps non-finite floats to null
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            meta: vec![("build".into(), BUILD_ID.into())],
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta_float(&mut self, key: &str, value: f64) {
        self.meta(key, format_float(value));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema={SCHEMA}\n");
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "schema": SCHEMA,
            "meta": meta,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("tables always serialise");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "probability", "converged", "note"]);
        t.meta_float("p", 0.3);
        t.push(vec![Cell::from(-1i64), Cell::from(1e-12), Cell::from(true), Cell::from("a,b")]);
        t.push(vec![Cell::from(0i64), Cell::from(0.5), Cell::from(false), Cell::from("plain")]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=asep-table/1");
        assert!(lines[1].starts_with("# build="));
        assert_eq!(lines[2], "# p=0.3");
        assert_eq!(lines[3], "x,probability,converged,note");
        assert_eq!(lines[4], "-1,1e-12,true,\"a,b\"");
        assert_eq!(lines[5], "0,0.5,false,plain");
    }

    #[test]
    fn json_roundtrips() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["meta"]["p"], "0.3");
        assert_eq!(v["rows"][0][1].as_f64(), Some(1e-12));
        assert_eq!(v["columns"][3], "note");
    }

    #[test]
    fn floats_roundtrip() {
        for v in [0.0, 1.0, 0.1, 1e-5, 3.780449377133e-7, -2.5e20, 0.9999999999999999] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
