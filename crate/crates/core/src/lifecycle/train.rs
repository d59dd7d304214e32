use super::config::{BatchPolicy, TrainingConfig};
use crate::data::{SampleWindow, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::nn::{GradientSet, LstmState, NetworkModel, NetworkSpec};

/// A trained model and its per-epoch mean squared error.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: NetworkModel,
    pub loss_trace: Vec<f64>,
}

/// Trains a freshly initialized model (seeded by `config.seed`).
pub fn train_batch(
    spec: NetworkSpec,
    windows: &[SampleWindow],
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    train_batch_with(spec, windows, config, |_, _| {})
}

/// [`train_batch`] with a callback receiving `(epoch, mean_loss)` after every epoch.
pub fn train_batch_with(
    spec: NetworkSpec,
    windows: &[SampleWindow],
    config: &TrainingConfig,
    on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    let model = NetworkModel::init(spec, config.seed)?;
    fit(model, windows, config, on_epoch)
}

/// Continues training from existing (typically transferred) weights.
pub fn retrain(
    model: NetworkModel,
    windows: &[SampleWindow],
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    fit(model, windows, config, |_, _| {})
}

pub fn retrain_with(
    model: NetworkModel,
    windows: &[SampleWindow],
    config: &TrainingConfig,
    on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    fit(model, windows, config, on_epoch)
}

/// Chronological training. Each epoch starts from a zero LSTM state and
/// walks the windows in order, carrying state across windows and days.
/// Under [`BatchPolicy::Day`] every consecutive run of 96 windows (the last
/// run may be shorter) yields one update with the run's mean gradient.
fn fit(
    mut model: NetworkModel,
    windows: &[SampleWindow],
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::Contract("no training windows".into()));
    }
    if windows.windows(2).any(|p| p[1].slot <= p[0].slot) {
        return Err(Error::Contract(
            "training windows must be in chronological order".into(),
        ));
    }
    let spec = *model.spec();
    let mut grads = GradientSet::zeros(&spec);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut state = LstmState::zeros(spec.lstm_cells);
        let mut total = 0.0;
        for day in windows.chunks(SLOTS_PER_DAY) {
            grads.clear();
            for w in day {
                let step = model.accumulate_gradients(&w.features, w.target, &state, &mut grads)?;
                total += step.loss;
                if spec.stateful {
                    state = step.state;
                }
                if config.batch_policy == BatchPolicy::Window {
                    model.apply_update(&grads, config.learning_rate)?;
                    grads.clear();
                }
            }
            if config.batch_policy == BatchPolicy::Day {
                grads.scale(1.0 / day.len() as f64);
                model.apply_update(&grads, config.learning_rate)?;
            }
        }
        let mean = total / windows.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Data(format!("training diverged at epoch {epoch}")));
        }
        loss_trace.push(mean);
        on_epoch(epoch, mean);
    }
    model.reset_state();
    Ok(TrainOutcome { model, loss_trace })
}
