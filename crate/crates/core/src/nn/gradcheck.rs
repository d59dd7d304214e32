//! Central finite-difference verification of the analytic gradients.

use super::kernels;
use super::model::{LagMatrix, NetworkModel};
use super::params::ParamSet;
use super::real::{DoubleDouble, Real};
use super::spec::NetworkSpec;
use crate::error::{Error, Result};

/// Float width of the analytic gradients under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// f64 analytic gradients against double-double central differences.
    /// Expect errors below 1e-4 with ε = 1e-5.
    #[default]
    Double,
    /// Both routes in f32. Central differences cannot resolve gradients below
    /// about `ulp(loss) / 2ε`, so small weights show large relative errors.
    Single,
}

/// Max over every weight of `|analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`,
/// starting from the model's current carry state.
///
/// The analytic gradient is the f64 backward pass. The numeric side evaluates
/// the same forward pass in double-double arithmetic, so its roundoff (about
/// 1e-11 absolute for an f64 central difference at ε = 1e-5) does not mask
/// gradients near 1e-8.
pub fn gradient_check(
    model: &NetworkModel,
    window: &LagMatrix,
    target: f64,
    epsilon: f64,
) -> Result<f64> {
    gradient_check_with(model, window, target, epsilon, Precision::Double)
}

pub fn gradient_check_with(
    model: &NetworkModel,
    window: &LagMatrix,
    target: f64,
    epsilon: f64,
    precision: Precision,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::Contract(format!(
            "epsilon {epsilon} outside (0, 1e-3]"
        )));
    }
    let (_, grads) = model.compute_gradients(window, target)?;
    let state = model.state();
    let spec = model.spec();
    let errors = match precision {
        Precision::Double => {
            let analytic: Vec<f64> = grads.params().iter().copied().collect();
            let numeric = central_differences::<DoubleDouble>(
                spec,
                model.params().cast(),
                &cast(window.as_slice()),
                &cast(&state.hidden),
                &cast(&state.cell),
                DoubleDouble::new(target),
                DoubleDouble::new(epsilon),
            );
            relative_errors(&analytic, &numeric)
        }
        Precision::Single => {
            let params: ParamSet<f32> = model.params().cast();
            let x: Vec<f32> = cast(window.as_slice());
            let (h0, c0): (Vec<f32>, Vec<f32>) = (cast(&state.hidden), cast(&state.cell));
            let target = target as f32;
            let trace = kernels::forward(spec, &params, &x, &h0, &c0);
            let mut g = ParamSet::<f32>::zeros(spec);
            kernels::backward(
                spec,
                &params,
                &x,
                &trace,
                2.0 * (trace.output - target),
                &mut g,
            );
            let analytic: Vec<f64> = g.iter().map(|v| *v as f64).collect();
            let numeric =
                central_differences::<f32>(spec, params, &x, &h0, &c0, target, epsilon as f32);
            relative_errors(&analytic, &numeric)
        }
    };
    Ok(errors.into_iter().fold(0.0, f64::max))
}

fn cast<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|x| T::from_f64(*x)).collect()
}

fn relative_errors(analytic: &[f64], numeric: &[f64]) -> Vec<f64> {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-12))
        .collect()
}

/// `(L(w + ε) − L(w − ε)) / 2ε` for every weight, in declaration order.
fn central_differences<T: Real>(
    spec: &NetworkSpec,
    mut params: ParamSet<T>,
    window: &[T],
    h0: &[T],
    c0: &[T],
    target: T,
    eps: T,
) -> Vec<f64> {
    let loss = |p: &ParamSet<T>| {
        let r = kernels::forward(spec, p, window, h0, c0).output - target;
        r * r
    };
    (0..params.len())
        .map(|i| {
            let original = *params.flat_mut(i);
            *params.flat_mut(i) = original + eps;
            let plus = loss(&params);
            *params.flat_mut(i) = original - eps;
            let minus = loss(&params);
            *params.flat_mut(i) = original;
            ((plus - minus) / (eps + eps)).to_f64()
        })
        .collect()
}
