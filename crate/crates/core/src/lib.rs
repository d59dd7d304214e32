//! Short-term traffic flow forecasting with a convolutional-recurrent
//! network, transfer by weight copy, and prequential online updates.
//!
//! - [`nn`]: the network and its exact gradients
//! - [`data`]: flow series, CSV ingest, windows, normalization, synthetic corridors
//! - [`lifecycle`]: batch training, transfer, retraining, online steps, persistence
//! - [`eval`]: week-windowed R², offline/online test passes, the scenario matrix

pub mod data;
pub mod error;
pub mod eval;
pub mod lifecycle;
pub mod nn;

pub use error::{Error, Result};
pub use nn::{LagMatrix, NetworkModel, NetworkSpec};
