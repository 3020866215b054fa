use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Method};
use crate::{Error, Result};

/// One (seed, demand, method) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub demand: f64,
    pub method: Method,
    /// `sum` or `max`.
    pub objective_kind: String,
    pub objective: f64,
    pub bound: Option<f64>,
    pub sum_load_mc: Option<f64>,
    pub sum_load_sc: Option<f64>,
    pub max_load_mc: Option<f64>,
    pub max_load_sc: Option<f64>,
    /// UEs served by two or more cells (a mean over seeds on mean rows).
    pub jt_ue_count: f64,
    pub seconds: f64,
    /// Seed, or `mean` on rows averaged over seeds.
    pub seed: String,
    pub status: String,
    /// `(objective - bound) / objective`.
    pub bound_gap: Option<f64>,
    pub loads: Vec<f64>,
    pub nodes_explored: Option<usize>,
    pub adjustments: Option<usize>,
}

/// Mean bound gap of one method over all per-seed rows with a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub method: Method,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Demand sweep actually used, bit/s per UE.
    pub demands: Vec<f64>,
    pub rows: Vec<ReportRow>,
    pub gap_summary: Vec<GapSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidConfig(format!("unknown report format {s:?}"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 13] = [
    "demand",
    "method",
    "objective_kind",
    "objective",
    "bound",
    "sum_load_mc",
    "sum_load_sc",
    "max_load_mc",
    "max_load_sc",
    "jt_ue_count",
    "seconds",
    "seed",
    "status",
];

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl ReportRow {
    fn csv_record(&self) -> [String; 13] {
        [
            num(self.demand),
            self.method.to_string(),
            self.objective_kind.clone(),
            num(self.objective),
            opt(self.bound),
            opt(self.sum_load_mc),
            opt(self.sum_load_sc),
            opt(self.max_load_mc),
            opt(self.max_load_sc),
            num(self.jt_ue_count),
            num(self.seconds),
            self.seed.clone(),
            self.status.clone(),
        ]
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes the report; CSV carries the flat columns, JSON the full report.
pub fn write_report(report: &ExperimentReport, format: ReportFormat, out: impl Write) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for row in &report.rows {
                w.write_record(row.csv_record()).map_err(csv_err)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_report(report, format, file)
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_report(report, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("report output is UTF-8"))
}
