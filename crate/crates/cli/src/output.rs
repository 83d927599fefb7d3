//! Fixed-schema tables and their CSV and JSON encodings.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Number, Value};

pub const QUANTUM_MACHINE_SCHEMA: [&str; 9] = [
    "gamma_rad",
    "epsilon",
    "analytic_p",
    "empirical_p",
    "yes",
    "trials",
    "wilson_lo",
    "wilson_hi",
    "seed",
];

pub const TRIALS_SCHEMA: [&str; 10] = [
    "scenario",
    "process",
    "state",
    "analytic_p",
    "empirical_p",
    "yes",
    "trials",
    "wilson_lo",
    "wilson_hi",
    "seed",
];

pub const TAXONOMY_SCHEMA: [&str; 5] = [
    "property",
    "effect",
    "predictability",
    "persistence",
    "witness_state",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Count(n)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Real(x) => sig9(*x),
            Cell::Count(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Same rounding as the CSV cell.
            Cell::Real(x) => sig9(*x)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Count(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Positional decimal with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if !(-30..=30).contains(&exp) {
        return sci;
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_owned()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &'static [&'static str]) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.schema.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(self.schema)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W, seed: u64) -> Result<()> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .schema
                    .iter()
                    .zip(row)
                    .map(|(k, c)| ((*k).to_owned(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut meta = Map::new();
        meta.insert("seed".into(), Value::from(seed));
        meta.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        let mut doc = Map::new();
        doc.insert("meta".into(), Value::Object(meta));
        doc.insert("rows".into(), Value::Array(rows));
        serde_json::to_writer_pretty(&mut out, &Value::Object(doc))?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.5), "0.500000000");
        assert_eq!(sig9(0.0), "0.00000000");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(sig9(0.012345678912), "0.0123456789");
        assert_eq!(sig9(0.99999999999), "1.00000000");
        assert_eq!(sig9(123456.0), "123456.000");
        assert_eq!(sig9(-0.25), "-0.250000000");
        assert_eq!(sig9(-1e-40), "-1.00000000e-40");
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        Table::new(&TAXONOMY_SCHEMA).write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "property,effect,predictability,persistence,witness_state\n"
        );
    }

    #[test]
    fn csv_rows_use_lf_and_quote_when_needed() {
        let mut t = Table::new(&TRIALS_SCHEMA[..3]);
        t.push(vec!["a".into(), "b,c".into(), Cell::Empty]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scenario,process,state\na,\"b,c\",\n"
        );
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let mut t = Table::new(&QUANTUM_MACHINE_SCHEMA);
        t.push(vec![
            0.1.into(),
            Cell::Empty,
            (1.0 / 3.0).into(),
            0.5.into(),
            5u64.into(),
            10u64.into(),
            0.2.into(),
            0.8.into(),
            9u64.into(),
        ]);
        let mut buf = Vec::new();
        t.write_json(&mut buf, 9).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["meta"]["seed"], 9);
        let row = &v["rows"][0];
        assert_eq!(row["analytic_p"], 0.333333333);
        assert_eq!(row["epsilon"], Value::Null);
        let keys: Vec<&String> = row.as_object().unwrap().keys().collect();
        assert_eq!(keys, QUANTUM_MACHINE_SCHEMA.iter().collect::<Vec<_>>());
    }
}
