use std::ops::Range;

use super::series::RoadDataset;
use crate::error::{Error, Result};
use crate::nn::LagMatrix;

/// Lags per loop fed to the network.
pub const INPUT_LAGS: usize = 5;

/// One supervised example: flows of every loop at slots `t−lags … t−1`
/// (oldest row first) and the target loop's flow at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub features: LagMatrix,
    pub target: f64,
    pub slot: usize,
}

pub fn build_windows(dataset: &RoadDataset, range: Range<usize>) -> Result<Vec<SampleWindow>> {
    build_windows_with_lags(dataset, range, INPUT_LAGS)
}

/// One window per slot in `range`.
pub fn build_windows_with_lags(
    dataset: &RoadDataset,
    range: Range<usize>,
    lags: usize,
) -> Result<Vec<SampleWindow>> {
    if range.is_empty() {
        return Ok(Vec::new());
    }
    if range.start < lags {
        return Err(Error::Contract(format!(
            "window range starts at slot {} but needs {lags} slots of history",
            range.start
        )));
    }
    if range.end > dataset.len() {
        return Err(Error::Contract(format!(
            "window range ends at slot {} beyond series length {}",
            range.end,
            dataset.len()
        )));
    }
    let loops = dataset.loops();
    let target = dataset.target().values();
    range
        .map(|t| {
            let mut data = Vec::with_capacity(lags * loops.len());
            for lag_slot in t - lags..t {
                data.extend(loops.iter().map(|l| l.values()[lag_slot]));
            }
            Ok(SampleWindow {
                features: LagMatrix::new(lags, loops.len(), data)?,
                target: target[t],
                slot: t,
            })
        })
        .collect()
}
