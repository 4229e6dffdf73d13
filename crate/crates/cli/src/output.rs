//! Result tables and their CSV / JSON encodings.
//!
//! Floats are written with `{:.16e}` (17 significant digits), so equal
//! values always produce equal bytes.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
    Empty,
}

impl Cell {
    fn csv(&self, out: &mut String) {
        match self {
            Cell::F(x) => fmt_float(*x, out),
            Cell::I(i) => write!(out, "{i}").unwrap(),
            Cell::B(b) => out.push_str(if *b { "true" } else { "false" }),
            Cell::S(s) => out.push_str(s),
            Cell::Empty => {}
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) if x.is_finite() => json!(x),
            Cell::F(x) => {
                let mut s = String::new();
                fmt_float(*x, &mut s);
                json!(s)
            }
            Cell::I(i) => json!(i),
            Cell::B(b) => json!(b),
            Cell::S(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

fn fmt_float(x: f64, out: &mut String) {
    if x.is_nan() {
        out.push_str("nan");
    } else if x.is_infinite() {
        out.push_str(if x > 0.0 { "inf" } else { "-inf" });
    } else {
        // -0.0 and 0.0 print the same
        write!(out, "{:.16e}", if x == 0.0 { 0.0 } else { x }).unwrap();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.csv(&mut out);
            }
            out.push('\n');
        }
        out
    }

    /// `{"columns": [...], "rows": [[...], ...]}`; non-finite floats become
    /// strings.
    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({ "columns": self.columns, "rows": rows }))
            .expect("table serializes");
        s.push('\n');
        s
    }

    pub fn encode(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.rows.push(vec![Cell::F(0.1), Cell::I(-3), Cell::Empty]);
        t.rows
            .push(vec![Cell::F(f64::INFINITY), Cell::B(true), Cell::S("x".into())]);
        t.rows.push(vec![Cell::F(-0.0), Cell::F(1.0), Cell::F(f64::NAN)]);
        assert_eq!(
            t.to_csv(),
            "a,b,c\n1.0000000000000001e-1,-3,\ninf,true,x\n0.0000000000000000e0,1.0000000000000000e0,nan\n"
        );
    }

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -2.5e-17] {
            let mut s = String::new();
            fmt_float(x, &mut s);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(&["x", "y"]);
        t.rows.push(vec![Cell::F(f64::INFINITY), Cell::Empty]);
        let v: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["columns"][1], "y");
        assert_eq!(v["rows"][0][0], "inf");
        assert!(v["rows"][0][1].is_null());
    }
}
