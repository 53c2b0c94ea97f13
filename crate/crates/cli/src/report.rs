use mifs_core::dataset::Dataset;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub const SIGNIFICANT_DIGITS: usize = 10;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .unwrap_or(v)
}

/// Text form used in CSV extracts: the rounded value, or `inf`, `-inf`, `nan`.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:?}", round_sig(v))
    }
}

/// Rounds every floating-point number in a JSON tree. Integers are left
/// alone.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[derive(Serialize)]
pub struct DatasetSummary {
    pub source: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub standardized: bool,
    pub jittered: bool,
}

impl DatasetSummary {
    pub fn new(source: &Path, d: &Dataset, standardized: bool, jittered: bool) -> Self {
        DatasetSummary {
            source: source.display().to_string(),
            n_samples: d.n_samples(),
            n_features: d.n_features(),
            feature_names: d.feature_names().to_vec(),
            target_name: d.target_name().to_string(),
            standardized,
            jittered,
        }
    }
}

pub struct RunReport {
    pub command: Vec<String>,
    pub seeds: Map<String, Value>,
    pub dataset: DatasetSummary,
    pub payload: Value,
}

impl RunReport {
    pub fn to_value(&self) -> Value {
        let mut v = json!({
            "tool": "mifs",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seeds": self.seeds,
            "dataset": self.dataset,
            "payload": self.payload,
        });
        round_floats(&mut v);
        v
    }

    /// Pretty JSON followed by a newline, to `out` or stdout.
    pub fn write(&self, out: Option<&Path>) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&self.to_value())
            .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
        text.push('\n');
        write_text(out, &text)
    }
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

/// Writes rows as CSV with a header line.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
