use super::real::Real;

use super::spec::NetworkSpec;
use crate::error::{Error, Result};

/// LSTM gate order used by every gate-indexed array.
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CELL: usize = 2;
pub const GATE_OUTPUT: usize = 3;

/// Every trainable array of the network, flat and row-major.
///
/// Layouts:
/// - `conv_w`: `[filters][loops][kernel]`
/// - `gate_w[g]`: `[cells][filters + cells]`, convolution features first
/// - `dense_w`: `[units][cells]`
/// - `out_w`: `[units]`, `out_b`: one element
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T = f64> {
    pub conv_w: Vec<T>,
    pub conv_b: Vec<T>,
    pub gate_w: [Vec<T>; 4],
    pub gate_b: [Vec<T>; 4],
    pub dense_w: Vec<T>,
    pub dense_b: Vec<T>,
    pub out_w: Vec<T>,
    pub out_b: Vec<T>,
}

impl<T: Real> ParamSet<T> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let z = |n: usize| vec![T::zero(); n];
        let gate = spec.lstm_cells * spec.gate_fan_in();
        Self {
            conv_w: z(spec.conv_filters * spec.input_loops * spec.conv_kernel),
            conv_b: z(spec.conv_filters),
            gate_w: std::array::from_fn(|_| z(gate)),
            gate_b: std::array::from_fn(|_| z(spec.lstm_cells)),
            dense_w: z(spec.dense_units * spec.lstm_cells),
            dense_b: z(spec.dense_units),
            out_w: z(spec.dense_units),
            out_b: z(1),
        }
    }

    /// Arrays in declaration order: conv, then per gate (weights, bias), dense, output.
    pub fn arrays(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = vec![&self.conv_w, &self.conv_b];
        for g in 0..4 {
            out.push(&self.gate_w[g]);
            out.push(&self.gate_b[g]);
        }
        out.extend([
            self.dense_w.as_slice(),
            &self.dense_b,
            &self.out_w,
            &self.out_b,
        ]);
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [T]> {
        let Self {
            conv_w,
            conv_b,
            gate_w,
            gate_b,
            dense_w,
            dense_b,
            out_w,
            out_b,
        } = self;
        let mut out: Vec<&mut [T]> = vec![conv_w, conv_b];
        for (w, b) in gate_w.iter_mut().zip(gate_b.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out.extend([dense_w.as_mut_slice(), dense_b, out_w, out_b]);
        out
    }

    pub fn len(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks every array against the closed-form shapes of `spec`.
    pub fn audit(&self, spec: &NetworkSpec) -> Result<()> {
        for ((name, dims), array) in spec.array_shapes().iter().zip(self.arrays()) {
            let expected: usize = dims.iter().product();
            if array.len() != expected {
                return Err(Error::Contract(format!(
                    "{name} has {} elements, expected {expected} for shape {dims:?}",
                    array.len()
                )));
            }
        }
        Ok(())
    }

    pub fn fill(&mut self, value: T) {
        for a in self.arrays_mut() {
            a.fill(value);
        }
    }

    /// `self += factor * other`, element-wise.
    pub fn add_scaled(&mut self, other: &Self, factor: T) {
        for (dst, src) in self.arrays_mut().into_iter().zip(other.arrays()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *d + factor * *s;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for a in self.arrays_mut() {
            for v in a.iter_mut() {
                *v = *v * factor;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.arrays().into_iter().flatten()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.arrays_mut().into_iter().flatten()
    }

    pub fn cast<U: Real>(&self) -> ParamSet<U> {
        let conv = |v: &Vec<T>| -> Vec<U> { v.iter().map(|x| U::from_f64(x.to_f64())).collect() };
        ParamSet {
            conv_w: conv(&self.conv_w),
            conv_b: conv(&self.conv_b),
            gate_w: std::array::from_fn(|g| conv(&self.gate_w[g])),
            gate_b: std::array::from_fn(|g| conv(&self.gate_b[g])),
            dense_w: conv(&self.dense_w),
            dense_b: conv(&self.dense_b),
            out_w: conv(&self.out_w),
            out_b: conv(&self.out_b),
        }
    }

    /// Returns a mutable reference to the flat element `index` across all arrays.
    pub(crate) fn flat_mut(&mut self, mut index: usize) -> &mut T {
        for a in self.arrays_mut() {
            if index < a.len() {
                return &mut a[index];
            }
            index -= a.len();
        }
        panic!("flat parameter index out of range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_pass_audit() {
        let spec = NetworkSpec::standard();
        let p = ParamSet::<f64>::zeros(&spec);
        p.audit(&spec).unwrap();
        assert_eq!(p.len(), 42601);
    }

    #[test]
    fn audit_catches_wrong_shape() {
        let spec = NetworkSpec::standard();
        let mut p = ParamSet::<f64>::zeros(&spec);
        p.gate_w[GATE_CELL].pop();
        let err = p.audit(&spec).unwrap_err().to_string();
        assert!(err.contains("lstm_cell_w"), "{err}");
    }

    #[test]
    fn flat_index_walks_declaration_order() {
        let spec = NetworkSpec::standard();
        let mut p = ParamSet::<f64>::zeros(&spec);
        *p.flat_mut(950) = 1.0;
        assert_eq!(p.gate_w[GATE_INPUT][0], 1.0);
        *p.flat_mut(42600) = 2.0;
        assert_eq!(p.out_b[0], 2.0);
    }
}
