use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernels::{self, Trace};
use super::params::ParamSet;
use super::spec::NetworkSpec;
use crate::error::{Error, Result};

/// A `lags × loops` matrix of (normalized) flows, row-major: row `r` holds
/// every loop's value at the `r`-th oldest lag.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    lags: usize,
    loops: usize,
    data: Vec<f64>,
}

impl LagMatrix {
    pub fn new(lags: usize, loops: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != lags * loops {
            return Err(Error::Contract(format!(
                "lag matrix {lags}×{loops} needs {} values, got {}",
                lags * loops,
                data.len()
            )));
        }
        Ok(Self { lags, loops, data })
    }

    pub fn zeros(lags: usize, loops: usize) -> Self {
        Self {
            lags,
            loops,
            data: vec![0.0; lags * loops],
        }
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn loops(&self) -> usize {
        self.loops
    }

    pub fn get(&self, lag: usize, loop_idx: usize) -> f64 {
        self.data[lag * self.loops + loop_idx]
    }

    pub fn row(&self, lag: usize) -> &[f64] {
        &self.data[lag * self.loops..(lag + 1) * self.loops]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Hidden and cell vectors carried between consecutive windows.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(cells: usize) -> Self {
        Self {
            hidden: vec![0.0; cells],
            cell: vec![0.0; cells],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.hidden.iter().chain(&self.cell).all(|v| *v == 0.0)
    }

    fn from_trace(trace: &Trace<f64>, cells: usize) -> Self {
        let (h, c) = trace.final_state(cells);
        Self {
            hidden: h.to_vec(),
            cell: c.to_vec(),
        }
    }
}

/// Gradients of the squared-error loss, shape-congruent with the model's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(ParamSet<f64>);

impl GradientSet {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Self(ParamSet::zeros(spec))
    }

    pub fn params(&self) -> &ParamSet<f64> {
        &self.0
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f64> {
        &mut self.0
    }

    pub fn clear(&mut self) {
        self.0.fill(0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.scale(factor);
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl From<ParamSet<f64>> for GradientSet {
    fn from(p: ParamSet<f64>) -> Self {
        Self(p)
    }
}

/// Result of one forward/backward pass accumulated into a [`GradientSet`].
#[derive(Debug, Clone)]
pub struct GradientStep {
    pub loss: f64,
    pub prediction: f64,
    /// LSTM state after the window, for callers that carry state forward.
    pub state: LstmState,
}

/// The forecaster: architecture, weights, and the LSTM carry state.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    spec: NetworkSpec,
    params: ParamSet<f64>,
    state: LstmState,
    seed: u64,
}

impl NetworkModel {
    /// Fan-in scaled uniform weights, zero biases, zero state.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::zeros(&spec);
        let conv_fan_in = spec.input_loops * spec.conv_kernel;
        let mut draw = |array: &mut [f64], fan_in: usize| {
            let limit = (INIT_GAIN / fan_in as f64).sqrt();
            for w in array.iter_mut() {
                *w = rng.random_range(-limit..limit);
            }
        };
        draw(&mut params.conv_w, conv_fan_in);
        for w in params.gate_w.iter_mut() {
            draw(w, spec.gate_fan_in());
        }
        draw(&mut params.dense_w, spec.lstm_cells);
        draw(&mut params.out_w, spec.dense_units);
        Ok(Self {
            state: LstmState::zeros(spec.lstm_cells),
            spec,
            params,
            seed,
        })
    }

    /// Builds a model from explicit weights; state starts at zero.
    pub fn from_params(spec: NetworkSpec, params: ParamSet<f64>, seed: u64) -> Result<Self> {
        spec.validate()?;
        params.audit(&spec)?;
        Ok(Self {
            state: LstmState::zeros(spec.lstm_cells),
            spec,
            params,
            seed,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet<f64> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f64> {
        &mut self.params
    }

    pub fn state(&self) -> &LstmState {
        &self.state
    }

    pub fn set_state(&mut self, state: LstmState) -> Result<()> {
        if state.hidden.len() != self.spec.lstm_cells || state.cell.len() != self.spec.lstm_cells {
            return Err(Error::Contract(
                "LSTM state size does not match the spec".into(),
            ));
        }
        if state
            .hidden
            .iter()
            .chain(&state.cell)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Data("non-finite LSTM state".into()));
        }
        self.state = state;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// True when both models hold bit-identical weights (state ignored).
    pub fn same_weights(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self
                .params
                .iter()
                .zip(other.params.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn reset_state(&mut self) {
        self.state = LstmState::zeros(self.spec.lstm_cells);
    }

    fn check_window(&self, window: &LagMatrix) -> Result<()> {
        if window.lags() != self.spec.input_lags || window.loops() != self.spec.input_loops {
            return Err(Error::Contract(format!(
                "window is {}×{}, model expects {}×{}",
                window.lags(),
                window.loops(),
                self.spec.input_lags,
                self.spec.input_loops
            )));
        }
        if let Some(pos) = window.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite window value at lag {}, loop {}",
                pos / window.loops(),
                pos % window.loops()
            )));
        }
        Ok(())
    }

    fn run(&self, window: &LagMatrix, start: &LstmState) -> Trace<f64> {
        kernels::forward(
            &self.spec,
            &self.params,
            window.as_slice(),
            &start.hidden,
            &start.cell,
        )
    }

    /// One prediction. With `carry_state` the LSTM starts from the carried
    /// state and the model keeps the final state; otherwise it starts from
    /// zeros and the model is left untouched.
    pub fn forward(&mut self, window: &LagMatrix, carry_state: bool) -> Result<f64> {
        self.check_window(window)?;
        if carry_state {
            let trace = self.run(window, &self.state);
            let next = LstmState::from_trace(&trace, self.spec.lstm_cells);
            self.set_state(next)?;
            Ok(trace.output)
        } else {
            Ok(self.predict(window)?)
        }
    }

    /// Stateless prediction from a zero LSTM state.
    pub fn predict(&self, window: &LagMatrix) -> Result<f64> {
        self.check_window(window)?;
        let zero = LstmState::zeros(self.spec.lstm_cells);
        Ok(self.run(window, &zero).output)
    }

    /// Squared-error loss and its exact gradient for one window, starting
    /// from the model's current carry state. Weights and state are unchanged.
    pub fn compute_gradients(&self, window: &LagMatrix, target: f64) -> Result<(f64, GradientSet)> {
        let mut grads = GradientSet::zeros(&self.spec);
        let step = self.accumulate_gradients(window, target, &self.state, &mut grads)?;
        Ok((step.loss, grads))
    }

    /// Adds this window's loss gradient into `grads`, starting from `start`.
    pub fn accumulate_gradients(
        &self,
        window: &LagMatrix,
        target: f64,
        start: &LstmState,
        grads: &mut GradientSet,
    ) -> Result<GradientStep> {
        self.check_window(window)?;
        if !target.is_finite() {
            return Err(Error::Data(format!("non-finite target {target}")));
        }
        self.check_grads(grads)?;
        let trace = self.run(window, start);
        let residual = trace.output - target;
        kernels::backward(
            &self.spec,
            &self.params,
            window.as_slice(),
            &trace,
            2.0 * residual,
            &mut grads.0,
        );
        Ok(GradientStep {
            loss: residual * residual,
            prediction: trace.output,
            state: LstmState::from_trace(&trace, self.spec.lstm_cells),
        })
    }

    fn check_grads(&self, grads: &GradientSet) -> Result<()> {
        grads.0.audit(&self.spec)
    }

    /// Plain gradient descent: `w ← w − lr · ∂L/∂w`. The carry state is untouched.
    pub fn apply_update(&mut self, grads: &GradientSet, learning_rate: f64) -> Result<()> {
        if learning_rate.is_nan() || learning_rate < 0.0 || learning_rate.is_infinite() {
            return Err(Error::Contract(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        self.check_grads(grads)?;
        if learning_rate > 0.0 {
            self.params.add_scaled(&grads.0, -learning_rate);
        }
        Ok(())
    }
}

/// Squared fan-in gain of the uniform initializer: limit = sqrt(gain / fan_in).
const INIT_GAIN: f64 = 3.0;
