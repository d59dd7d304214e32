//! Canonical flow CSV (`timestamp,loop_id,flow`) and the loop-order manifest.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use chrono::NaiveDateTime;

use super::series::{FlowSeries, RoadDataset, LOOPS_PER_ROAD, SLOT_MINUTES, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 3] = ["timestamp", "loop_id", "flow"];

/// Loop ids ordered upstream → downstream; line 5 is the target loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopManifest {
    loop_ids: Vec<String>,
}

impl LoopManifest {
    pub fn new(loop_ids: Vec<String>) -> Result<Self> {
        if loop_ids.len() != LOOPS_PER_ROAD {
            return Err(Error::Ingest {
                row: 0,
                message: format!(
                    "manifest lists {} loops, expected {LOOPS_PER_ROAD}",
                    loop_ids.len()
                ),
            });
        }
        for (i, id) in loop_ids.iter().enumerate() {
            if id.is_empty() || id.contains(',') {
                return Err(Error::Ingest {
                    row: i + 1,
                    message: format!("invalid loop id {id:?} in manifest"),
                });
            }
            if loop_ids[..i].contains(id) {
                return Err(Error::Ingest {
                    row: i + 1,
                    message: format!("duplicate loop id {id} in manifest"),
                });
            }
        }
        Ok(Self { loop_ids })
    }

    pub fn read(reader: impl Read) -> Result<Self> {
        let mut ids = Vec::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            let id = line.trim();
            if !id.is_empty() {
                ids.push(id.to_string());
            }
        }
        Self::new(ids)
    }

    pub fn of(dataset: &RoadDataset) -> Self {
        Self {
            loop_ids: dataset.loop_ids().into_iter().map(str::to_string).collect(),
        }
    }

    pub fn loop_ids(&self) -> &[String] {
        &self.loop_ids
    }

    pub fn write(&self, mut sink: impl Write) -> Result<()> {
        for id in &self.loop_ids {
            writeln!(sink, "{id}")?;
        }
        Ok(())
    }
}

/// Ingest switches. Everything is off by default: gaps are errors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Forward-fill gaps of at most this many missing slots (0 disables).
    pub repair_max_gap: usize,
}

struct Row {
    line: usize,
    time: NaiveDateTime,
    flow: f64,
}

fn ingest(row: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        message: message.into(),
    }
}

pub fn parse_flow_csv(
    source: impl Read,
    manifest: &LoopManifest,
    road_name: &str,
) -> Result<RoadDataset> {
    parse_flow_csv_with(source, manifest, road_name, ParseOptions::default())
}

/// Reads a flow CSV, groups rows by loop, sorts them by time, and checks
/// that every loop is present, contiguous, and aligned with the others.
/// Row numbers in errors are 1-based file lines (the header is line 1).
pub fn parse_flow_csv_with(
    source: impl Read,
    manifest: &LoopManifest,
    road_name: &str,
    options: ParseOptions,
) -> Result<RoadDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(ingest(
            1,
            format!("header must be `{}`", CSV_HEADER.join(",")),
        ));
    }

    let index: HashMap<&str, usize> = manifest
        .loop_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut per_loop: Vec<Vec<Row>> = (0..LOOPS_PER_ROAD).map(|_| Vec::new()).collect();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        if record.len() != 3 {
            return Err(ingest(
                line,
                format!("expected 3 fields, got {}", record.len()),
            ));
        }
        let time = NaiveDateTime::parse_from_str(&record[0], TIMESTAMP_FORMAT)
            .map_err(|e| ingest(line, format!("bad timestamp {:?}: {e}", &record[0])))?;
        let loop_idx = *index.get(&record[1]).ok_or_else(|| {
            ingest(
                line,
                format!("loop {:?} is not in the manifest", &record[1]),
            )
        })?;
        let flow: f64 = record[2]
            .parse()
            .map_err(|_| ingest(line, format!("bad flow value {:?}", &record[2])))?;
        if !flow.is_finite() || flow < 0.0 {
            return Err(ingest(
                line,
                format!("flow {flow} must be finite and non-negative"),
            ));
        }
        per_loop[loop_idx].push(Row { line, time, flow });
    }

    let slot = chrono::Duration::minutes(SLOT_MINUTES as i64);
    let mut loops = Vec::with_capacity(LOOPS_PER_ROAD);
    for (loop_idx, mut rows) in per_loop.into_iter().enumerate() {
        let id = &manifest.loop_ids()[loop_idx];
        if rows.is_empty() {
            return Err(ingest(0, format!("loop {id} has no rows")));
        }
        rows.sort_by_key(|r| r.time);
        let mut values = Vec::with_capacity(rows.len());
        values.push(rows[0].flow);
        for pair in rows.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            let step = cur.time - prev.time;
            if step == slot {
                values.push(cur.flow);
                continue;
            }
            if step.is_zero() {
                return Err(ingest(
                    cur.line,
                    format!("loop {id}: duplicate timestamp {}", cur.time),
                ));
            }
            if step.num_seconds() % slot.num_seconds() != 0 {
                return Err(ingest(
                    cur.line,
                    format!(
                        "loop {id}: non-uniform slot between {} and {}",
                        prev.time, cur.time
                    ),
                ));
            }
            let missing = (step.num_seconds() / slot.num_seconds()) as usize - 1;
            if missing > options.repair_max_gap {
                return Err(ingest(
                    cur.line,
                    format!(
                        "loop {id}: {missing} missing slot(s) starting at {}",
                        (prev.time + slot).format(TIMESTAMP_FORMAT)
                    ),
                ));
            }
            values.extend(std::iter::repeat_n(prev.flow, missing));
            values.push(cur.flow);
        }
        loops.push(FlowSeries::new(id.clone(), rows[0].time, values)?);
    }
    RoadDataset::new(road_name, loops).map_err(|e| ingest(0, e.to_string()))
}

/// Writes one row per (slot, loop), slot-major, loops in manifest order.
/// Flows use the shortest representation that parses back to the same f64.
pub fn write_flow_csv(dataset: &RoadDataset, sink: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(CSV_HEADER)?;
    for t in 0..dataset.len() {
        let stamp = dataset.timestamp(t).format(TIMESTAMP_FORMAT).to_string();
        for l in dataset.loops() {
            writer.write_record([stamp.as_str(), l.loop_id(), &l.values()[t].to_string()])?;
        }
    }
    writer.flush()?;
    Ok(())
}
