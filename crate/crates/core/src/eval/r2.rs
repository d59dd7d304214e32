use std::ops::Range;

use crate::data::SLOTS_PER_WEEK;
use crate::error::{Error, Result};

/// Observed and predicted flows (original units) at consecutive slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    slots: Vec<usize>,
    observed: Vec<f64>,
    predicted: Vec<f64>,
}

impl PredictionTrace {
    pub fn new(slots: Vec<usize>, observed: Vec<f64>, predicted: Vec<f64>) -> Result<Self> {
        if slots.len() != observed.len() || slots.len() != predicted.len() {
            return Err(Error::Contract(format!(
                "trace columns differ in length: {} slots, {} observed, {} predicted",
                slots.len(),
                observed.len(),
                predicted.len()
            )));
        }
        if slots.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Contract(
                "trace slots must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            slots,
            observed,
            predicted,
        })
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// The entries whose slot falls inside `span`.
    pub fn restrict(&self, span: Range<usize>) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|i| span.contains(&self.slots[*i]))
            .collect();
        Self {
            slots: keep.iter().map(|i| self.slots[*i]).collect(),
            observed: keep.iter().map(|i| self.observed[*i]).collect(),
            predicted: keep.iter().map(|i| self.predicted[*i]).collect(),
        }
    }

    pub fn mean_squared_error(&self) -> f64 {
        let n = self.len().max(1) as f64;
        self.observed
            .iter()
            .zip(&self.predicted)
            .map(|(o, p)| (o - p) * (o - p))
            .sum::<f64>()
            / n
    }
}

/// R² over each trailing window of `window` trace entries. Entry `i` covers
/// trace positions `[i, i + window)`, i.e. it is reported at position
/// `i + window − 1`. `None` marks a window whose observations are constant.
#[derive(Debug, Clone, PartialEq)]
pub struct R2Series {
    window: usize,
    values: Vec<Option<f64>>,
}

impl R2Series {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Trace position the `i`-th value is reported at.
    pub fn position(&self, i: usize) -> usize {
        i + self.window - 1
    }

    /// R² reported at trace position `pos`, if a full window ends there.
    pub fn at_position(&self, pos: usize) -> Option<Option<f64>> {
        pos.checked_sub(self.window - 1)
            .and_then(|i| self.values.get(i).copied())
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn summary(&self) -> R2Summary {
        let defined: Vec<f64> = self.defined().collect();
        R2Summary {
            mean_r2: (!defined.is_empty())
                .then(|| defined.iter().sum::<f64>() / defined.len() as f64),
            min_r2: defined.iter().copied().reduce(f64::min),
            final_r2: self.values.last().copied().flatten(),
        }
    }
}

/// Mean, minimum, and last-window R²; `None` when nothing is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2Summary {
    pub mean_r2: Option<f64>,
    pub min_r2: Option<f64>,
    pub final_r2: Option<f64>,
}

/// Week-windowed coefficient of determination (default window 672 slots):
/// `1 − Σ(o − ô)² / Σ(o − ō)²` with ō the mean of the window's observations.
pub fn r2_windowed(trace: &PredictionTrace, window: usize) -> Result<R2Series> {
    if window == 0 {
        return Err(Error::Contract(
            "R² window must be at least one slot".into(),
        ));
    }
    if trace.len() < window {
        return Err(Error::Contract(format!(
            "trace of {} slots is shorter than the {window}-slot R² window",
            trace.len()
        )));
    }
    let (obs, pred) = (trace.observed(), trace.predicted());
    let values = (0..=trace.len() - window)
        .map(|start| {
            let o = &obs[start..start + window];
            let p = &pred[start..start + window];
            if o.iter().all(|v| *v == o[0]) {
                return None;
            }
            let mean = o.iter().sum::<f64>() / window as f64;
            let (res, tot) = o.iter().zip(p).fold((0.0, 0.0), |(res, tot), (o, p)| {
                (res + (o - p) * (o - p), tot + (o - mean) * (o - mean))
            });
            Some(1.0 - res / tot)
        })
        .collect();
    Ok(R2Series { window, values })
}

pub fn r2_weekly(trace: &PredictionTrace) -> Result<R2Series> {
    r2_windowed(trace, SLOTS_PER_WEEK)
}
