//! CSV and JSON export of experiment results, and waveform CSV I/O.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! same report always produces the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{invariant, Error, Result};
use crate::experiment::{BerMap, TrajectoryReport};
use crate::handover::HandoverEvent;
use crate::phy::SampledWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    /// Pretty-printed JSON.
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(invariant("format", format!("unknown format {other:?}"))),
        }
    }
}

pub trait CsvReport {
    fn to_csv(&self) -> String;
}

impl CsvReport for TrajectoryReport {
    /// `label,x_m,y_m,frame,kurtosis,excess,class,gain_t<id>_a...,serving_cell`
    fn to_csv(&self) -> String {
        let mut out = String::from("label,x_m,y_m,frame,kurtosis,excess,class");
        for id in &self.cells {
            let _ = write!(out, ",gain_t{id}_a");
        }
        out.push_str(",serving_cell\n");
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r.label,
                r.position[0],
                r.position[1],
                r.frame,
                r.kurtosis.kurtosis,
                r.kurtosis.excess,
                r.kurtosis.classification
            );
            for g in &r.gains {
                let _ = write!(out, ",{}", g.amps);
            }
            let _ = writeln!(out, ",{}", r.serving_cell);
        }
        out
    }
}

impl CsvReport for [HandoverEvent] {
    fn to_csv(&self) -> String {
        let mut out = format!("{}\n", HandoverEvent::CSV_HEADER);
        for e in self {
            out.push_str(&e.csv_record());
            out.push('\n');
        }
        out
    }
}

impl CsvReport for BerMap {
    /// `x_m,y_m,ber_t<id>...,ber_max`, row-major.
    fn to_csv(&self) -> String {
        let mut out = String::from("x_m,y_m");
        for (id, _) in &self.per_tx {
            let _ = write!(out, ",ber_t{id}");
        }
        out.push_str(",ber_max\n");
        for (p, pos) in self.positions.iter().enumerate() {
            let _ = write!(out, "{},{}", pos[0], pos[1]);
            for (_, v) in &self.per_tx {
                let _ = write!(out, ",{}", v[p]);
            }
            let _ = writeln!(out, ",{}", self.combined[p]);
        }
        out
    }
}

impl CsvReport for SampledWaveform {
    /// `n,time_s,amps` with `n` starting at 1 and `time_s = n * ts`.
    fn to_csv(&self) -> String {
        let mut out = String::from("n,time_s,amps\n");
        for (i, v) in self.samples().iter().enumerate() {
            let n = i + 1;
            let _ = writeln!(out, "{},{},{}", n, n as f64 * self.ts(), v);
        }
        out
    }
}

/// Writes `report` to `path` as CSV or JSON.
pub fn export_report<R>(report: &R, path: &Path, format: ExportFormat) -> Result<()>
where
    R: CsvReport + Serialize + ?Sized,
{
    let text = match format {
        ExportFormat::Csv => report.to_csv(),
        ExportFormat::Json => {
            let mut s =
                serde_json::to_string_pretty(report).map_err(|e| Error::Schema(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    fs::write(path, text)?;
    Ok(())
}

/// Reads the `amps` column of a waveform CSV (`n,time_s,amps`).
pub fn read_waveform_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::EmptyInput)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let amps = cols
        .iter()
        .position(|c| *c == "amps")
        .ok_or_else(|| Error::Schema("waveform CSV header must contain an `amps` column".into()))?;
    lines
        .enumerate()
        .map(|(i, line)| {
            let field = line
                .split(',')
                .nth(amps)
                .map(str::trim)
                .ok_or_else(|| Error::Schema(format!("line {}: missing amps field", i + 2)))?;
            field
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("line {}: {field:?} is not a number", i + 2)))
        })
        .collect()
}
