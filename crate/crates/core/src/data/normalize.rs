use std::ops::Range;

use super::series::{RoadDataset, TARGET_INDEX};
use super::window::SampleWindow;
use crate::error::{Error, Result};
use crate::nn::LagMatrix;

/// Per-loop min-max scaling fitted on a training range only.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    bounds: Vec<(f64, f64)>,
    target_loop: usize,
}

impl Normalizer {
    /// Fits `(min, max)` per loop on `training_range`; nothing outside it is read.
    pub fn fit(dataset: &RoadDataset, training_range: Range<usize>) -> Result<Self> {
        if training_range.is_empty() || training_range.end > dataset.len() {
            return Err(Error::Contract(format!(
                "normalizer range {training_range:?} is empty or beyond {} slots",
                dataset.len()
            )));
        }
        let bounds = dataset
            .loops()
            .iter()
            .map(|l| {
                let values = &l.values()[training_range.clone()];
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(*v), hi.max(*v))
                    });
                if hi <= lo {
                    Err(Error::Data(format!(
                        "loop {} is constant ({lo}) over the training range; cannot normalize",
                        l.loop_id()
                    )))
                } else {
                    Ok((lo, hi))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bounds,
            target_loop: TARGET_INDEX,
        })
    }

    pub fn from_bounds(bounds: Vec<(f64, f64)>, target_loop: usize) -> Result<Self> {
        if target_loop >= bounds.len() {
            return Err(Error::Contract(
                "target loop outside normalizer bounds".into(),
            ));
        }
        if let Some((i, _)) = bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| hi.partial_cmp(lo) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::Data(format!("loop {i}: max must exceed min")));
        }
        Ok(Self {
            bounds,
            target_loop,
        })
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn target_loop(&self) -> usize {
        self.target_loop
    }

    pub fn loops(&self) -> usize {
        self.bounds.len()
    }

    /// Maps the training range of `loop_idx` onto [0, 1]; no clipping.
    pub fn apply(&self, loop_idx: usize, x: f64) -> f64 {
        let (lo, hi) = self.bounds[loop_idx];
        (x - lo) / (hi - lo)
    }

    pub fn invert(&self, loop_idx: usize, y: f64) -> f64 {
        let (lo, hi) = self.bounds[loop_idx];
        lo + y * (hi - lo)
    }

    pub fn apply_target(&self, x: f64) -> f64 {
        self.apply(self.target_loop, x)
    }

    pub fn invert_target(&self, y: f64) -> f64 {
        self.invert(self.target_loop, y)
    }

    pub fn apply_window(&self, window: &SampleWindow) -> Result<SampleWindow> {
        let f = &window.features;
        if f.loops() != self.loops() {
            return Err(Error::Contract(format!(
                "window has {} loops, normalizer was fitted on {}",
                f.loops(),
                self.loops()
            )));
        }
        let data = f
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| self.apply(i % f.loops(), *v))
            .collect();
        Ok(SampleWindow {
            features: LagMatrix::new(f.lags(), f.loops(), data)?,
            target: self.apply_target(window.target),
            slot: window.slot,
        })
    }

    pub fn apply_windows(&self, windows: &[SampleWindow]) -> Result<Vec<SampleWindow>> {
        windows.iter().map(|w| self.apply_window(w)).collect()
    }
}
