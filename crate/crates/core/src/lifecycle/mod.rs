//! Knowledge acquisition paths: batch training, transfer with optional
//! retraining, prequential online updates, and model persistence.

mod config;
mod online;
mod persist;
mod train;

pub use config::{BatchPolicy, OnlineConfig, TrainingConfig};
pub use online::online_step;
pub(crate) use online::online_step_with_buffer;
pub use persist::{decode_model, encode_model, load_model, save_model, MAGIC};
pub use train::{retrain, retrain_with, train_batch, train_batch_with, TrainOutcome};

use crate::nn::NetworkModel;

/// Copies every weight of a donor model; the copy starts with a zero carry state.
pub fn transfer(source: &NetworkModel) -> NetworkModel {
    let mut copy = source.clone();
    copy.reset_state();
    copy
}
