use chrono::{Duration, NaiveDateTime};

use crate::error::{Error, Result};

pub const SLOT_MINUTES: u32 = 15;
pub const SLOTS_PER_DAY: usize = 96;
pub const SLOTS_PER_WEEK: usize = 7 * SLOTS_PER_DAY;
/// Loops per corridor: four upstream, the target, four downstream.
pub const LOOPS_PER_ROAD: usize = 9;
pub const TARGET_INDEX: usize = 4;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// One loop detector's contiguous 15-minute flow counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSeries {
    loop_id: String,
    start: NaiveDateTime,
    values: Vec<f64>,
}

impl FlowSeries {
    pub fn new(loop_id: impl Into<String>, start: NaiveDateTime, values: Vec<f64>) -> Result<Self> {
        let loop_id = loop_id.into();
        if let Some(pos) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data(format!(
                "loop {loop_id}: flow {} at slot {pos} is not a finite non-negative count",
                values[pos]
            )));
        }
        Ok(Self {
            loop_id,
            start,
            values,
        })
    }

    pub fn loop_id(&self) -> &str {
        &self.loop_id
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn slot_minutes(&self) -> u32 {
        SLOT_MINUTES
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, slot: usize) -> NaiveDateTime {
        slot_timestamp(self.start, slot)
    }
}

pub fn slot_timestamp(start: NaiveDateTime, slot: usize) -> NaiveDateTime {
    start + Duration::minutes(SLOT_MINUTES as i64 * slot as i64)
}

/// A nine-loop corridor ordered upstream → downstream, target in the middle.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadDataset {
    road_name: String,
    loops: Vec<FlowSeries>,
}

impl RoadDataset {
    pub fn new(road_name: impl Into<String>, loops: Vec<FlowSeries>) -> Result<Self> {
        if loops.len() != LOOPS_PER_ROAD {
            return Err(Error::Contract(format!(
                "a road needs {LOOPS_PER_ROAD} loops, got {}",
                loops.len()
            )));
        }
        let first = &loops[0];
        for l in &loops[1..] {
            if l.start() != first.start() || l.len() != first.len() {
                return Err(Error::Contract(format!(
                    "loop {} ({} slots from {}) is not aligned with loop {} ({} slots from {})",
                    l.loop_id(),
                    l.len(),
                    l.start(),
                    first.loop_id(),
                    first.len(),
                    first.start()
                )));
            }
        }
        Ok(Self {
            road_name: road_name.into(),
            loops,
        })
    }

    pub fn road_name(&self) -> &str {
        &self.road_name
    }

    pub fn loops(&self) -> &[FlowSeries] {
        &self.loops
    }

    pub fn target_index(&self) -> usize {
        TARGET_INDEX
    }

    pub fn target(&self) -> &FlowSeries {
        &self.loops[TARGET_INDEX]
    }

    pub fn start(&self) -> NaiveDateTime {
        self.loops[0].start()
    }

    /// Number of slots in every series.
    pub fn len(&self) -> usize {
        self.loops[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn days(&self) -> usize {
        self.len() / SLOTS_PER_DAY
    }

    pub fn loop_ids(&self) -> Vec<&str> {
        self.loops.iter().map(|l| l.loop_id()).collect()
    }

    pub fn timestamp(&self, slot: usize) -> NaiveDateTime {
        slot_timestamp(self.start(), slot)
    }

    /// Returns a copy whose values are `f(loop_index, slot, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let loops = self
            .loops
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let values = l
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(t, v)| f(k, t, *v))
                    .collect();
                FlowSeries::new(l.loop_id(), l.start(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.road_name.clone(), loops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2018, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    #[test]
    fn rejects_negative_flow() {
        assert!(FlowSeries::new("a", start(), vec![1.0, -2.0]).is_err());
        assert!(FlowSeries::new("a", start(), vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn road_needs_nine_aligned_loops() {
        let mk = |n: usize| FlowSeries::new(format!("l{n}"), start(), vec![1.0; 4]).unwrap();
        assert!(RoadDataset::new("r", (0..8).map(mk).collect()).is_err());
        let mut loops: Vec<_> = (0..9).map(mk).collect();
        loops[3] = FlowSeries::new("short", start(), vec![1.0; 3]).unwrap();
        assert!(RoadDataset::new("r", loops).is_err());
        let road = RoadDataset::new("r", (0..9).map(mk).collect()).unwrap();
        assert_eq!(road.target().loop_id(), "l4");
        assert_eq!(road.timestamp(5).to_string(), "2018-01-01 01:15:00");
    }
}
