//! Central-difference gradient checking.

use alloc::format;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Compares the tape gradient of the scalar `f(x)` against central
/// differences with step `h` and returns the largest coordinate-wise
/// `|analytic - numeric| / (|analytic| + |numeric| + 1e-8)`.
///
/// `f` receives a fresh tape and the variable bound to `x` and must
/// return a scalar node.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    let eval = |xv: Tensor| -> Result<f64> {
        let mut tape = Tape::new();
        let v = tape.constant(xv);
        let out = f(&mut tape, v)?;
        let val = tape.value(out);
        if val.len() != 1 {
            return Err(Error::NonScalarLoss(val.shape().to_vec()));
        }
        let y = val.item();
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("function value {y}")));
        }
        Ok(y)
    };

    let mut tape = Tape::new();
    let v = tape.param(x.clone());
    let out = f(&mut tape, v)?;
    if !tape.value(out).item().is_finite() {
        return Err(Error::NonFinite("function value".into()));
    }
    tape.backward(out)?;
    let analytic = tape.grad(v).unwrap_or_else(|| Tensor::zeros(x.shape()));
    if !analytic.is_finite() {
        return Err(Error::NonFinite("analytic gradient".into()));
    }

    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * h);
        let a = analytic.data()[i];
        let err = libm::fabs(a - numeric) / (libm::fabs(a) + libm::fabs(numeric) + 1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
