use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use crate::data::{slot_timestamp, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};

use super::r2::{PredictionTrace, R2Series};
use super::scenario::ScenarioReport;

pub const TRACE_HEADER: [&str; 5] = ["slot", "timestamp", "observed", "predicted", "r2_window"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "scenario",
    "setting",
    "donor",
    "deployment_slot",
    "mean_r2",
    "min_r2",
    "final_r2",
];
pub const SUMMARY_FILE: &str = "summary.csv";

/// Paths written by [`export_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedFiles {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Trace file name for the `index`-th report.
pub fn trace_file_name(index: usize, report: &ScenarioReport) -> String {
    let donor: String = report
        .id
        .donor
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!(
        "{index:02}_{}_{}_{donor}.csv",
        report.id.scenario.as_str().to_ascii_lowercase(),
        report.id.setting
    )
}

/// Writes one trace CSV per report and `summary.csv` into `dir`, which must exist.
pub fn export_report(reports: &[ScenarioReport], dir: &Path) -> Result<ExportedFiles> {
    let mut traces = Vec::with_capacity(reports.len());
    for (i, report) in reports.iter().enumerate() {
        let path = dir.join(trace_file_name(i, report));
        let mut out = BufWriter::new(File::create(&path)?);
        write_trace_csv(&report.trace, &report.r2, report.origin, &mut out)?;
        out.flush()?;
        traces.push(path);
    }
    let summary = dir.join(SUMMARY_FILE);
    let mut out = BufWriter::new(File::create(&summary)?);
    write_summary_csv(reports, &mut out)?;
    out.flush()?;
    Ok(ExportedFiles { traces, summary })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Writes `trace` with its R² series; timestamps count from `origin`, the
/// timestamp of slot 0.
pub fn write_trace_csv(
    trace: &PredictionTrace,
    r2: &R2Series,
    origin: NaiveDateTime,
    sink: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRACE_HEADER)?;
    for i in 0..trace.len() {
        let r2 = match r2.at_position(i) {
            None => String::new(),
            Some(v) => opt(v),
        };
        let slot = trace.slots()[i];
        w.write_record([
            slot.to_string(),
            slot_timestamp(origin, slot)
                .format(TIMESTAMP_FORMAT)
                .to_string(),
            trace.observed()[i].to_string(),
            trace.predicted()[i].to_string(),
            r2,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(reports: &[ScenarioReport], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SUMMARY_HEADER)?;
    for r in reports {
        w.write_record([
            r.id.scenario.as_str().to_string(),
            r.id.setting.as_str().to_string(),
            r.id.donor.clone(),
            r.deployment_slot.to_string(),
            opt(r.summary.mean_r2),
            opt(r.summary.min_r2),
            opt(r.summary.final_r2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the slot, observed and predicted columns of a trace CSV.
pub fn read_trace_csv(source: impl Read) -> Result<PredictionTrace> {
    let mut r = csv::Reader::from_reader(source);
    if r.headers()?.iter().ne(TRACE_HEADER) {
        return Err(Error::Ingest {
            row: 1,
            message: format!("expected header {}", TRACE_HEADER.join(",")),
        });
    }
    let (mut slots, mut observed, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |k: usize| {
            rec.get(k).ok_or_else(|| Error::Ingest {
                row,
                message: format!("missing column {}", TRACE_HEADER[k]),
            })
        };
        let bad = |k: usize| Error::Ingest {
            row,
            message: format!("unparseable {}", TRACE_HEADER[k]),
        };
        slots.push(field(0)?.parse().map_err(|_| bad(0))?);
        observed.push(field(2)?.parse().map_err(|_| bad(2))?);
        predicted.push(field(3)?.parse().map_err(|_| bad(3))?);
    }
    PredictionTrace::new(slots, observed, predicted)
}
