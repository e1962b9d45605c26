//! Report rows and their CSV / JSON-lines serialization.
//!
//! Every real is printed with 12 significant digits so reruns with the same
//! seed produce byte-identical files (the wall-time column aside).

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// `x` with 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

/// Ordered `key=value` pairs echoed with each row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Params(Vec::new())
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn real(self, key: &str, value: f64) -> Self {
        self.with(key, fmt_real(value))
    }

    pub fn encode(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub params: Params,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
    /// Seconds spent on the cell that produced the row.
    pub wall_time: f64,
}

impl ReportRow {
    pub fn new(experiment: &str, params: Params, metric: &str, value: f64, seed: u64) -> Self {
        ReportRow { experiment: experiment.into(), params, metric: metric.into(), value, stderr: None, seed, wall_time: 0.0 }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn timed(mut self, seconds: f64) -> Self {
        self.wall_time = seconds;
        self
    }
}

pub const COLUMNS: [&str; 7] = ["experiment", "params", "metric", "value", "stderr", "seed", "wall_time"];

#[derive(Serialize)]
struct JsonRow<'a> {
    experiment: &'a str,
    params: String,
    metric: &'a str,
    value: String,
    stderr: String,
    seed: u64,
    wall_time: String,
}

impl<'a> From<&'a ReportRow> for JsonRow<'a> {
    fn from(r: &'a ReportRow) -> Self {
        JsonRow {
            experiment: &r.experiment,
            params: r.params.encode(),
            metric: &r.metric,
            value: fmt_real(r.value),
            stderr: r.stderr.map(fmt_real).unwrap_or_default(),
            seed: r.seed,
            wall_time: fmt_real(r.wall_time),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(COLUMNS).map_err(io)?;
    for r in rows {
        let j = JsonRow::from(r);
        w.write_record([j.experiment, &j.params, j.metric, &j.value, &j.stderr, &j.seed.to_string(), &j.wall_time])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    for r in rows {
        let line = serde_json::to_string(&JsonRow::from(r)).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// The JSON-lines mirror of a CSV path: same stem, `.jsonl` extension.
pub fn jsonl_path(csv: &Path) -> PathBuf {
    csv.with_extension("jsonl")
}

/// Writes `path` and its JSON-lines mirror.
pub fn write_files(rows: &[ReportRow], path: &Path) -> Result<()> {
    write_csv(rows, std::io::BufWriter::new(std::fs::File::create(path)?))?;
    write_jsonl(rows, std::io::BufWriter::new(std::fs::File::create(jsonl_path(path))?))
}
