use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use escape_core::measure::{to_f64, ExactRational};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Rows with a fixed header. CSV for pipelines, JSON as an array of objects.
pub struct Table {
    headers: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table { headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.headers.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.headers.iter().map(|h| h.to_string()).zip(row.iter().cloned()).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut out = serde_json::to_string_pretty(&rows).expect("plain values");
                out.push('\n');
                out
            }
        }
    }
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Numerator, denominator and decimal columns for an exact value.
pub fn rational_cells(r: &ExactRational) -> [Value; 3] {
    [
        Value::String(r.numer().to_string()),
        Value::String(r.denom().to_string()),
        decimal(r),
    ]
}

pub fn decimal(r: &ExactRational) -> Value {
    serde_json::Number::from_f64(to_f64(r)).map_or(Value::Null, Value::Number)
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
