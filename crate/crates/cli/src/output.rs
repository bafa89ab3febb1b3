//! Result envelopes, number formatting and CSV.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use stratcomm_core::binary::Dataset;

use crate::error::CliError;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Significant digits of every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Rounds every floating-point number in a JSON tree.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Plain decimal rendering, no exponent.
pub fn format_number(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // no "-0"
        return String::from("0");
    }
    format!("{r}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRef {
    pub origin: String,
    /// SHA-256 of the canonical scenario document.
    pub digest: String,
}

/// Everything a command emits in JSON form.
#[derive(Debug, Clone, Serialize)]
pub struct ResultEnvelope {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub scenario: Option<ScenarioRef>,
    pub parameters: Value,
    pub result: Value,
    pub tables: Vec<Dataset>,
    pub warnings: Vec<String>,
}

impl ResultEnvelope {
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("envelopes serialize");
        let mut s = serde_json::to_string_pretty(&round_json(v)).expect("values serialize");
        s.push('\n');
        s
    }
}

/// Header row then one record per row, comma separated, newline terminated.
pub fn write_csv(w: &mut dyn Write, table: &Dataset) -> Result<(), CliError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let fail = |e: csv::Error| CliError::new(crate::error::ErrorKind::Io, e.to_string());
    out.write_record(&table.columns).map_err(fail)?;
    for row in &table.rows {
        out.write_record(row.iter().map(|&x| format_number(x))).map_err(fail)?;
    }
    out.flush().map_err(|e| CliError::new(crate::error::ErrorKind::Io, e.to_string()))
}
