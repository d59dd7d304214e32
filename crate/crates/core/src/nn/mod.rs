//! The convolutional-recurrent network: layers, exact backpropagation
//! through time, plain gradient descent, and a finite-difference checker.

mod gradcheck;
mod kernels;
mod model;
mod params;
mod real;
mod spec;

pub use gradcheck::{gradient_check, gradient_check_with, Precision};
pub use model::{GradientSet, GradientStep, LagMatrix, LstmState, NetworkModel};
pub use params::{ParamSet, GATE_CELL, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
pub use real::{DoubleDouble, Real};
pub use spec::NetworkSpec;
