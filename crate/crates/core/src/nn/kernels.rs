//! Forward and backward passes for the fixed conv → LSTM → dense → scalar graph.
//!
//! Generic over the float type so the gradient checker can run the same code
//! at single precision; the model itself always stores `f64`.

use super::real::Real;

use super::params::{ParamSet, GATE_CELL, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
use super::spec::NetworkSpec;

/// Activations cached by a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Trace<T> {
    /// `[steps][filters]` convolution pre-activations.
    pub conv_z: Vec<T>,
    pub conv_a: Vec<T>,
    /// `[steps + 1][cells]`; slot 0 holds the initial state.
    pub h: Vec<T>,
    pub c: Vec<T>,
    /// `[steps][4][cells]` activated gate values.
    pub gates: Vec<T>,
    /// `[steps][cells]` tanh of the new cell state.
    pub tanh_c: Vec<T>,
    pub dense_z: Vec<T>,
    pub dense_a: Vec<T>,
    pub output: T,
}

impl<T: Real> Trace<T> {
    pub fn final_state(&self, cells: usize) -> (&[T], &[T]) {
        let start = self.h.len() - cells;
        (&self.h[start..], &self.c[start..])
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

#[inline]
fn relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Runs the network on one `lags × loops` window starting from `(h0, c0)`.
pub(crate) fn forward<T: Real>(
    spec: &NetworkSpec,
    p: &ParamSet<T>,
    window: &[T],
    h0: &[T],
    c0: &[T],
) -> Trace<T> {
    let (loops, k_len, filters) = (spec.input_loops, spec.conv_kernel, spec.conv_filters);
    let (cells, units, steps) = (spec.lstm_cells, spec.dense_units, spec.conv_len());
    let row = spec.gate_fan_in();

    let mut conv_z = vec![T::zero(); steps * filters];
    for s in 0..steps {
        for f in 0..filters {
            let mut z = p.conv_b[f];
            for c in 0..loops {
                let w = &p.conv_w[(f * loops + c) * k_len..(f * loops + c + 1) * k_len];
                for (k, wk) in w.iter().enumerate() {
                    z = z + *wk * window[(s + k) * loops + c];
                }
            }
            conv_z[s * filters + f] = z;
        }
    }
    let conv_a: Vec<T> = conv_z.iter().map(|z| relu(*z)).collect();

    let mut h = Vec::with_capacity((steps + 1) * cells);
    let mut c = Vec::with_capacity((steps + 1) * cells);
    h.extend_from_slice(h0);
    c.extend_from_slice(c0);
    let mut gates = vec![T::zero(); steps * 4 * cells];
    let mut tanh_c = vec![T::zero(); steps * cells];
    for s in 0..steps {
        let x = &conv_a[s * filters..(s + 1) * filters];
        let h_prev = &h[s * cells..(s + 1) * cells];
        let g_block = &mut gates[s * 4 * cells..(s + 1) * 4 * cells];
        for g in 0..4 {
            let w = &p.gate_w[g];
            for j in 0..cells {
                let r = &w[j * row..(j + 1) * row];
                let z = p.gate_b[g][j] + dot(&r[..filters], x) + dot(&r[filters..], h_prev);
                g_block[g * cells + j] = if g == GATE_CELL { z.tanh() } else { sigmoid(z) };
            }
        }
        for j in 0..cells {
            let i_g = g_block[GATE_INPUT * cells + j];
            let f_g = g_block[GATE_FORGET * cells + j];
            let c_g = g_block[GATE_CELL * cells + j];
            let o_g = g_block[GATE_OUTPUT * cells + j];
            let c_new = f_g * c[s * cells + j] + i_g * c_g;
            let tc = c_new.tanh();
            tanh_c[s * cells + j] = tc;
            c.push(c_new);
            h.push(o_g * tc);
        }
    }

    let h_last = &h[steps * cells..];
    let dense_z: Vec<T> = (0..units)
        .map(|u| p.dense_b[u] + dot(&p.dense_w[u * cells..(u + 1) * cells], h_last))
        .collect();
    let dense_a: Vec<T> = dense_z.iter().map(|z| relu(*z)).collect();
    let output = p.out_b[0] + dot(&p.out_w, &dense_a);

    Trace {
        conv_z,
        conv_a,
        h,
        c,
        gates,
        tanh_c,
        dense_z,
        dense_a,
        output,
    }
}

/// Accumulates `d_output · ∂output/∂θ` into `grads`, backpropagating through
/// every LSTM step. The initial state is treated as a constant.
pub(crate) fn backward<T: Real>(
    spec: &NetworkSpec,
    p: &ParamSet<T>,
    window: &[T],
    trace: &Trace<T>,
    d_output: T,
    grads: &mut ParamSet<T>,
) {
    let (loops, k_len, filters) = (spec.input_loops, spec.conv_kernel, spec.conv_filters);
    let (cells, units, steps) = (spec.lstm_cells, spec.dense_units, spec.conv_len());
    let row = spec.gate_fan_in();
    let one = T::one();

    grads.out_b[0] = grads.out_b[0] + d_output;
    let mut dh = vec![T::zero(); cells];
    let h_last = &trace.h[steps * cells..];
    for u in 0..units {
        grads.out_w[u] = grads.out_w[u] + d_output * trace.dense_a[u];
        if trace.dense_z[u] <= T::zero() {
            continue;
        }
        let dz = d_output * p.out_w[u];
        grads.dense_b[u] = grads.dense_b[u] + dz;
        let gw = &mut grads.dense_w[u * cells..(u + 1) * cells];
        let w = &p.dense_w[u * cells..(u + 1) * cells];
        for j in 0..cells {
            gw[j] = gw[j] + dz * h_last[j];
            dh[j] = dh[j] + dz * w[j];
        }
    }

    let mut dc = vec![T::zero(); cells];
    let mut dz = vec![T::zero(); 4 * cells];
    let mut d_conv_a = vec![T::zero(); steps * filters];
    for s in (0..steps).rev() {
        let g_block = &trace.gates[s * 4 * cells..(s + 1) * 4 * cells];
        for j in 0..cells {
            let i_g = g_block[GATE_INPUT * cells + j];
            let f_g = g_block[GATE_FORGET * cells + j];
            let c_g = g_block[GATE_CELL * cells + j];
            let o_g = g_block[GATE_OUTPUT * cells + j];
            let tc = trace.tanh_c[s * cells + j];
            let c_prev = trace.c[s * cells + j];
            let dc_j = dc[j] + dh[j] * o_g * (one - tc * tc);
            dz[GATE_INPUT * cells + j] = dc_j * c_g * i_g * (one - i_g);
            dz[GATE_FORGET * cells + j] = dc_j * c_prev * f_g * (one - f_g);
            dz[GATE_CELL * cells + j] = dc_j * i_g * (one - c_g * c_g);
            dz[GATE_OUTPUT * cells + j] = dh[j] * tc * o_g * (one - o_g);
            dc[j] = dc_j * f_g;
        }

        let x = &trace.conv_a[s * filters..(s + 1) * filters];
        let h_prev = &trace.h[s * cells..(s + 1) * cells];
        let dx = &mut d_conv_a[s * filters..(s + 1) * filters];
        dh.fill(T::zero());
        for g in 0..4 {
            let w = &p.gate_w[g];
            let gw = &mut grads.gate_w[g];
            for j in 0..cells {
                let d = dz[g * cells + j];
                if d == T::zero() {
                    continue;
                }
                grads.gate_b[g][j] = grads.gate_b[g][j] + d;
                let r = &w[j * row..(j + 1) * row];
                let gr = &mut gw[j * row..(j + 1) * row];
                for m in 0..filters {
                    gr[m] = gr[m] + d * x[m];
                    dx[m] = dx[m] + d * r[m];
                }
                for m in 0..cells {
                    gr[filters + m] = gr[filters + m] + d * h_prev[m];
                    dh[m] = dh[m] + d * r[filters + m];
                }
            }
        }
    }

    for s in 0..steps {
        for f in 0..filters {
            if trace.conv_z[s * filters + f] <= T::zero() {
                continue;
            }
            let d = d_conv_a[s * filters + f];
            grads.conv_b[f] = grads.conv_b[f] + d;
            for c in 0..loops {
                let base = (f * loops + c) * k_len;
                for k in 0..k_len {
                    grads.conv_w[base + k] =
                        grads.conv_w[base + k] + d * window[(s + k) * loops + c];
                }
            }
        }
    }
}
