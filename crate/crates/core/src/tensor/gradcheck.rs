//! Central finite-difference checks against the tape's gradients.

use super::{Tape, Tensor, TensorError, Var};

/// Builds a scalar from the given inputs on a fresh tape.
pub type Build = dyn Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>;

fn loss_of(build: &Build, inputs: &[Tensor]) -> Result<f64, TensorError> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
    let out = build(&mut tape, &vars)?;
    Ok(tape.value(out).item())
}

/// Relative disagreement `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative disagreement between tape gradients and central finite
/// differences over every input coordinate.
pub fn max_rel_error(build: &Build, inputs: &[Tensor], eps: f64) -> Result<f64, TensorError> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let out = build(&mut tape, &vars)?;
    tape.backward(out)?;

    let mut worst = 0.0f64;
    for (k, t) in inputs.iter().enumerate() {
        let analytic = tape.grad(vars[k]).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; t.numel()]);
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += eps;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= eps;
            let numeric = (loss_of(build, &plus)? - loss_of(build, &minus)?) / (2.0 * eps);
            worst = worst.max(relative_error(a, numeric));
        }
    }
    Ok(worst)
}
