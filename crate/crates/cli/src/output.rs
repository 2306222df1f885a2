//! Artifacts: a summary JSON, a CSV table and the resolved config.
//!
//! Numbers are written in shortest round-trip decimal form, so an artifact
//! carries every bit of the computed values. Non-finite values become the
//! strings "Infinity", "-Infinity" and "NaN", which JSON cannot express as
//! numbers. Nothing run-dependent other than the config enters an artifact,
//! so replaying the embedded config reproduces it byte for byte.

use crate::config::{RunConfig, SCHEMA_VERSION};
use anyhow::{Context, Result};
use cbi_core::stats::McSummary;
use serde_json::{json, Map, Value};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

/// A JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("NaN")
    } else if x > 0.0 {
        json!("Infinity")
    } else {
        json!("-Infinity")
    }
}

/// A scalar for a one-element grid, an array otherwise.
pub fn scalar_or_list(xs: &[f64]) -> Value {
    match xs {
        [x] => num(*x),
        _ => Value::Array(xs.iter().map(|&x| num(x)).collect()),
    }
}

/// {estimate, mc_error, oracle, z_score}; z_score is null without a finite oracle.
pub fn mc(s: &McSummary, oracle: f64) -> Value {
    let z = if oracle.is_finite() { num(s.z_score(oracle)) } else { Value::Null };
    json!({ "estimate": num(s.mean), "mc_error": num(s.std_error), "oracle": num(oracle), "z_score": z })
}

/// {input, value, tolerance_achieved} for an analytic evaluation.
pub fn record(input: Value, value: f64, tolerance_achieved: f64) -> Value {
    json!({ "input": input, "value": num(value), "tolerance_achieved": num(tolerance_achieved) })
}

pub fn cell(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        num(x).as_str().unwrap_or("NaN").to_string()
    }
}

/// Plot-ready rows with a header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(cell).collect());
    }
}

/// One oracle comparison enforced in self-check mode.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub passed: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, passed: bool) -> Self {
        Self { label: label.into(), passed }
    }

    /// |estimate − oracle| ≤ 3 standard errors.
    pub fn mc(label: &str, s: &McSummary, oracle: f64) -> Self {
        Self::new(
            format!("{label}: {} ± {} vs {} (z = {:.2})", s.mean, s.std_error, oracle, s.z_score(oracle)),
            s.agrees(oracle, 3.0, 0.0),
        )
    }
}

/// Everything a command produces.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Key results, printed as the one-line summary.
    pub summary: Map<String, Value>,
    pub records: Vec<Value>,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }

    /// The one-line summary: command name first, then the key results.
    pub fn summary_line(&self, config: &RunConfig) -> String {
        let mut m = Map::new();
        m.insert("command".into(), json!(config.command.name()));
        m.extend(self.summary.clone());
        Value::Object(m).to_string()
    }

    pub fn document(&self, config: &RunConfig) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool": concat!("cbi ", env!("CARGO_PKG_VERSION")),
            "config": config,
            "summary": self.summary,
            "records": self.records,
            "checks": self.checks.iter().map(|c| json!({ "label": c.label, "passed": c.passed })).collect::<Vec<_>>(),
        })
    }
}

/// Writes config.json, summary.json and, if present, `<command>.csv`.
pub fn write_artifacts(dir: &Path, config: &RunConfig, outcome: &Outcome) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let config_text = serde_json::to_string_pretty(config)?;
    fs::write(dir.join("config.json"), format!("{config_text}\n"))?;
    let doc = serde_json::to_string_pretty(&outcome.document(config))?;
    fs::write(dir.join("summary.json"), format!("{doc}\n"))?;
    if let Some(table) = &outcome.table {
        let path = dir.join(format!("{}.csv", config.command.name()));
        let mut file = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        // The config rides along as a comment line so the table is self-describing.
        writeln!(file, "# config={}", serde_json::to_string(config)?)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_are_strings() {
        assert_eq!(num(f64::INFINITY), json!("Infinity"));
        assert_eq!(num(1.5), json!(1.5));
        assert_eq!(cell(f64::NEG_INFINITY), "-Infinity");
        assert_eq!(scalar_or_list(&[2.0]), json!(2.0));
        assert_eq!(scalar_or_list(&[1.0, 2.0]), json!([1.0, 2.0]));
    }

    #[test]
    fn full_precision() {
        let x = 0.1 + 0.2;
        assert_eq!(cell(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(x).as_f64().unwrap(), x);
    }
}
