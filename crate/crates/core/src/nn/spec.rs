use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer sizes of the convolutional-recurrent forecaster.
///
/// The input is a `input_lags × input_loops` matrix of lagged flows. A
/// valid, stride-1 convolution over the lag axis (loops as channels) yields
/// `conv_len()` steps of `conv_filters` features, which an LSTM of
/// `lstm_cells` consumes; its last hidden state feeds a rectified dense
/// layer and a linear scalar output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub input_lags: usize,
    pub input_loops: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub lstm_cells: usize,
    pub dense_units: usize,
    pub stateful: bool,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self::standard()
    }
}

impl NetworkSpec {
    /// 9 loops × 5 lags, 50 conv filters of width 2, 75 LSTM cells, 50 dense units.
    pub const fn standard() -> Self {
        Self {
            input_lags: 5,
            input_loops: 9,
            conv_filters: 50,
            conv_kernel: 2,
            lstm_cells: 75,
            dense_units: 50,
            stateful: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("input_lags", self.input_lags),
            ("input_loops", self.input_loops),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("lstm_cells", self.lstm_cells),
            ("dense_units", self.dense_units),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Spec(format!("{name} must be at least 1")));
        }
        if self.conv_kernel > self.input_lags {
            return Err(Error::Spec(format!(
                "conv_kernel {} exceeds input_lags {}",
                self.conv_kernel, self.input_lags
            )));
        }
        Ok(())
    }

    /// Number of LSTM time steps produced by the convolution.
    pub fn conv_len(&self) -> usize {
        self.input_lags - self.conv_kernel + 1
    }

    /// Width of one LSTM gate row: convolution features followed by the hidden state.
    pub fn gate_fan_in(&self) -> usize {
        self.conv_filters + self.lstm_cells
    }

    pub fn window_len(&self) -> usize {
        self.input_lags * self.input_loops
    }

    pub fn conv_param_count(&self) -> usize {
        self.conv_filters * self.input_loops * self.conv_kernel + self.conv_filters
    }

    pub fn lstm_param_count(&self) -> usize {
        4 * (self.lstm_cells * self.gate_fan_in() + self.lstm_cells)
    }

    pub fn dense_param_count(&self) -> usize {
        self.dense_units * self.lstm_cells + self.dense_units
    }

    pub fn output_param_count(&self) -> usize {
        self.dense_units + 1
    }

    pub fn param_count(&self) -> usize {
        self.conv_param_count()
            + self.lstm_param_count()
            + self.dense_param_count()
            + self.output_param_count()
    }

    /// Shapes of every weight array, in declaration (and serialization) order.
    pub fn array_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let (f, c, k) = (self.conv_filters, self.input_loops, self.conv_kernel);
        let (h, u) = (self.lstm_cells, self.dense_units);
        let row = self.gate_fan_in();
        let mut shapes = vec![("conv_w", vec![f, c, k]), ("conv_b", vec![f])];
        for (w, b) in [
            ("lstm_input_w", "lstm_input_b"),
            ("lstm_forget_w", "lstm_forget_b"),
            ("lstm_cell_w", "lstm_cell_b"),
            ("lstm_output_w", "lstm_output_b"),
        ] {
            shapes.push((w, vec![h, row]));
            shapes.push((b, vec![h]));
        }
        shapes.push(("dense_w", vec![u, h]));
        shapes.push(("dense_b", vec![u]));
        shapes.push(("out_w", vec![1, u]));
        shapes.push(("out_b", vec![1]));
        shapes
    }
}
