//! Row formatting for CSV and JSON-lines output.

use std::io::Write;

use serde_json::{Map, Value};

use crate::error::Result;

/// One output record: input columns (echoed verbatim), computed columns
/// (printed at 9 significant digits), then trailing text columns such as
/// the evaluation method.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub inputs: Vec<(&'static str, String)>,
    pub outputs: Vec<(&'static str, f64)>,
    pub labels: Vec<(&'static str, String)>,
}

impl Row {
    pub fn input(mut self, name: &'static str, value: impl ToString) -> Self {
        self.inputs.push((name, value.to_string()));
        self
    }

    pub fn output(mut self, name: &'static str, value: f64) -> Self {
        self.outputs.push((name, value));
        self
    }

    pub fn label(mut self, name: &'static str, value: impl ToString) -> Self {
        self.labels.push((name, value.to_string()));
        self
    }

    pub fn method(self, method: &str) -> Self {
        self.label("method", method)
    }

    pub fn header(&self) -> Vec<&'static str> {
        self.inputs
            .iter()
            .map(|(k, _)| *k)
            .chain(self.outputs.iter().map(|(k, _)| *k))
            .chain(self.labels.iter().map(|(k, _)| *k))
            .collect()
    }

    fn fields(&self) -> Vec<String> {
        self.inputs
            .iter()
            .map(|(_, v)| v.clone())
            .chain(self.outputs.iter().map(|(_, v)| sig9(*v)))
            .chain(self.labels.iter().map(|(_, v)| v.clone()))
            .collect()
    }

    fn to_json(&self) -> Value {
        let mut inputs = Map::new();
        for (k, v) in &self.inputs {
            let value = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .and_then(serde_json::Number::from_f64)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(v.clone()));
            inputs.insert((*k).to_string(), value);
        }
        let mut obj = Map::new();
        obj.insert("inputs".into(), Value::Object(inputs));
        for (k, v) in &self.outputs {
            let text = sig9(*v);
            let value = text
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map(Value::Number)
                .unwrap_or(Value::String(text));
            obj.insert((*k).to_string(), value);
        }
        for (k, v) in &self.labels {
            obj.insert((*k).to_string(), Value::String(v.clone()));
        }
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros removed,
/// scientific notation outside `[1e-5, 1e9)`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Writes `rows` with a single header taken from the first row. JSON lines
/// have the shape `{"inputs": {...}, <output>: <value>, ..., "method": ...}`.
pub fn write_rows<W: Write>(out: W, rows: &[Row], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            if let Some(first) = rows.first() {
                w.write_record(first.header()).map_err(csv_error)?;
            }
            for row in rows {
                w.write_record(row.fields()).map_err(csv_error)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            for row in rows {
                writeln!(out, "{}", row.to_json())?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::error::Error::InvalidInput(format!("csv output failed: {other:?}")),
    }
}
