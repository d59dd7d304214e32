use super::config::OnlineConfig;
use crate::error::{Error, Result};
use crate::nn::{GradientSet, LagMatrix, NetworkModel};

/// Predict first, then learn from the observed value: one prequential step
/// with carried LSTM state. Returns the prediction made before any update.
pub fn online_step(
    model: &mut NetworkModel,
    features: &LagMatrix,
    observed: f64,
    config: &OnlineConfig,
) -> Result<f64> {
    let mut grads = GradientSet::zeros(model.spec());
    online_step_with_buffer(model, features, observed, config, &mut grads)
}

pub(crate) fn online_step_with_buffer(
    model: &mut NetworkModel,
    features: &LagMatrix,
    observed: f64,
    config: &OnlineConfig,
    grads: &mut GradientSet,
) -> Result<f64> {
    config.validate()?;
    if !observed.is_finite() {
        return Err(Error::Data(format!("non-finite observed value {observed}")));
    }
    let start = model.state().clone();
    grads.clear();
    let first = model.accumulate_gradients(features, observed, &start, grads)?;
    let prediction = first.prediction;
    if config.updates_per_sample > 0 {
        model.apply_update(grads, config.learning_rate)?;
        for _ in 1..config.updates_per_sample {
            grads.clear();
            model.accumulate_gradients(features, observed, &start, grads)?;
            model.apply_update(grads, config.learning_rate)?;
        }
    }
    model.set_state(first.state)?;
    Ok(prediction)
}
