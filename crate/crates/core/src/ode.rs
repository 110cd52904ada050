//! Classical fourth-order Runge–Kutta over any coefficient module.

use num_complex::Complex64;

use crate::error::Result;
use crate::forms::FormValue;
use crate::grassmann::{GrassmannElement, GrassmannMatrix};
use crate::linalg::CMatrix;

/// States the integrator can combine linearly.
pub trait OdeState: Clone {
    /// `self += s * other`
    fn axpy(&mut self, s: f64, other: &Self);
}

impl OdeState for GrassmannMatrix {
    fn axpy(&mut self, s: f64, other: &Self) {
        GrassmannMatrix::axpy(self, Complex64::from(s), other);
    }
}

impl OdeState for GrassmannElement {
    fn axpy(&mut self, s: f64, other: &Self) {
        GrassmannElement::axpy(self, Complex64::from(s), other);
    }
}

impl OdeState for FormValue {
    fn axpy(&mut self, s: f64, other: &Self) {
        FormValue::axpy(self, Complex64::from(s), other);
    }
}

impl OdeState for CMatrix {
    fn axpy(&mut self, s: f64, other: &Self) {
        *self += other * Complex64::from(s);
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += s * b;
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` in `steps` equal steps.
pub fn rk4<S, F>(mut f: F, y0: S, t0: f64, t1: f64, steps: usize) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y)?;
        let mut y2 = y.clone();
        y2.axpy(0.5 * h, &k1);
        let k2 = f(t + 0.5 * h, &y2)?;
        let mut y3 = y.clone();
        y3.axpy(0.5 * h, &k2);
        let k3 = f(t + 0.5 * h, &y3)?;
        let mut y4 = y.clone();
        y4.axpy(h, &k3);
        let k4 = f(t + h, &y4)?;
        y.axpy(h / 6.0, &k1);
        y.axpy(h / 3.0, &k2);
        y.axpy(h / 3.0, &k3);
        y.axpy(h / 6.0, &k4);
    }
    Ok(y)
}
