use crate::data::{Normalizer, SampleWindow};
use crate::error::Result;
use crate::lifecycle::{online_step_with_buffer, OnlineConfig};
use crate::nn::{GradientSet, NetworkModel};

use super::r2::PredictionTrace;

/// Frozen-weight test pass: chronological forward passes with carried state,
/// starting from a zero state. `windows` are in original flow units.
pub fn run_offline(
    model: &NetworkModel,
    normalizer: &Normalizer,
    windows: &[SampleWindow],
) -> Result<PredictionTrace> {
    let mut live = model.clone();
    live.reset_state();
    let mut predicted = Vec::with_capacity(windows.len());
    for w in windows {
        let scaled = normalizer.apply_window(w)?;
        let y = live.forward(&scaled.features, true)?;
        predicted.push(normalizer.invert_target(y));
    }
    collect(windows, predicted)
}

/// Prequential pass: predict each window, then take one gradient step on
/// its observed value. Returns the trace and the adapted model.
pub fn run_online(
    model: &NetworkModel,
    normalizer: &Normalizer,
    windows: &[SampleWindow],
    config: &OnlineConfig,
) -> Result<(PredictionTrace, NetworkModel)> {
    config.validate()?;
    let mut live = model.clone();
    live.reset_state();
    let mut grads = GradientSet::zeros(live.spec());
    let mut predicted = Vec::with_capacity(windows.len());
    for w in windows {
        let scaled = normalizer.apply_window(w)?;
        let y = online_step_with_buffer(
            &mut live,
            &scaled.features,
            scaled.target,
            config,
            &mut grads,
        )?;
        predicted.push(normalizer.invert_target(y));
    }
    live.reset_state();
    Ok((collect(windows, predicted)?, live))
}

fn collect(windows: &[SampleWindow], predicted: Vec<f64>) -> Result<PredictionTrace> {
    PredictionTrace::new(
        windows.iter().map(|w| w.slot).collect(),
        windows.iter().map(|w| w.target).collect(),
        predicted,
    )
}
