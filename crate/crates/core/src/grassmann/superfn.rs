//! Functions on R^{1|1} with Grassmann coefficients, the odd vector field
//! `D = ∂_θ + θ∂_t`, and the evaluation pullback `f ↦ f + θ df`.

use std::sync::Arc;

use num_complex::Complex64;

use super::element::{GrassmannElement, Parity};
use crate::error::{Error, Result};

/// Default central-difference step for time derivatives.
pub const DEFAULT_TIME_STEP: f64 = 1e-5;

/// Value `f₀ + θ f₁` of a function on R^{1|1} at a fixed time.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperValue {
    pub theta0: GrassmannElement,
    pub theta1: GrassmannElement,
}

impl SuperValue {
    pub fn new(theta0: GrassmannElement, theta1: GrassmannElement) -> Self {
        assert_eq!(theta0.num_generators(), theta1.num_generators());
        Self { theta0, theta1 }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.theta0 - &other.theta0)
            .max_abs()
            .max((&self.theta1 - &other.theta1).max_abs())
    }

    fn combine(&self, other: &Self, s: f64) -> Self {
        let mut out = self.clone();
        out.theta0.axpy(Complex64::from(s), &other.theta0);
        out.theta1.axpy(Complex64::from(s), &other.theta1);
        out
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            theta0: self.theta0.scale(Complex64::from(s)),
            theta1: self.theta1.scale(Complex64::from(s)),
        }
    }
}

type ValueFn = Arc<dyn Fn(f64) -> SuperValue + Send + Sync>;
/// `k`-th time derivative (`k ≥ 1`) of both components.
type DerivFn = Arc<dyn Fn(u32, f64) -> SuperValue + Send + Sync>;

#[derive(Clone)]
pub enum DerivativePolicy {
    Analytic(DerivFn),
    FiniteDifference { step: f64 },
}

impl Default for DerivativePolicy {
    fn default() -> Self {
        DerivativePolicy::FiniteDifference {
            step: DEFAULT_TIME_STEP,
        }
    }
}

/// A function `t ↦ f₀(t) + θ f₁(t)`. With `parity = Some(Even)` the θ⁰ part
/// is even and the θ¹ part odd (and the reverse for `Some(Odd)`).
#[derive(Clone)]
pub struct SuperFunction {
    q: usize,
    parity: Option<Parity>,
    value: ValueFn,
    derivative: DerivativePolicy,
}

impl SuperFunction {
    /// An even super function from its two components.
    pub fn even(
        q: usize,
        theta0: impl Fn(f64) -> GrassmannElement + Send + Sync + 'static,
        theta1: impl Fn(f64) -> GrassmannElement + Send + Sync + 'static,
        derivative: DerivativePolicy,
    ) -> Self {
        Self {
            q,
            parity: Some(Parity::Even),
            value: Arc::new(move |t| SuperValue::new(theta0(t), theta1(t))),
            derivative,
        }
    }

    pub fn from_parts(
        q: usize,
        parity: Option<Parity>,
        value: impl Fn(f64) -> SuperValue + Send + Sync + 'static,
        derivative: DerivativePolicy,
    ) -> Self {
        Self {
            q,
            parity,
            value: Arc::new(value),
            derivative,
        }
    }

    pub fn num_generators(&self) -> usize {
        self.q
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    /// Evaluates and checks the parity contract.
    pub fn eval(&self, t: f64) -> Result<SuperValue> {
        let v = (self.value)(t);
        if v.theta0.num_generators() != self.q {
            return Err(Error::Dimension("super function generator count".into()));
        }
        if let Some(p) = self.parity {
            v.theta0.require_parity(p, "θ⁰ component")?;
            v.theta1.require_parity(p.flip(), "θ¹ component")?;
        }
        Ok(v)
    }

    /// `k`-th time derivative of both components.
    pub fn time_derivative(&self, k: u32, t: f64) -> SuperValue {
        match &self.derivative {
            DerivativePolicy::Analytic(d) => d(k, t),
            DerivativePolicy::FiniteDifference { step } => {
                let h = *step;
                let value = self.value.clone();
                let mut f: Box<dyn Fn(f64) -> SuperValue> = Box::new(move |s| value(s));
                for _ in 0..k {
                    let prev = f;
                    f = Box::new(move |s| prev(s + h).combine(&prev(s - h), -1.0).scale(0.5 / h));
                }
                f(t)
            }
        }
    }

    /// The function `∂_t f`.
    pub fn partial_t(&self) -> SuperFunction {
        let this = self.clone();
        let value = move |t| this.time_derivative(1, t);
        let derivative = match &self.derivative {
            DerivativePolicy::Analytic(d) => {
                let d = d.clone();
                DerivativePolicy::Analytic(Arc::new(move |k, t| d(k + 1, t)))
            }
            fd => fd.clone(),
        };
        SuperFunction::from_parts(self.q, self.parity, value, derivative)
    }

    /// The function `D f = f₁ + θ f₀′`.
    pub fn apply_d(&self) -> SuperFunction {
        let this = self.clone();
        let value = move |t| SuperValue {
            theta0: (this.value)(t).theta1,
            theta1: this.time_derivative(1, t).theta0,
        };
        let derivative = match &self.derivative {
            DerivativePolicy::Analytic(d) => {
                let d = d.clone();
                DerivativePolicy::Analytic(Arc::new(move |k, t| SuperValue {
                    theta0: d(k, t).theta1,
                    theta1: d(k + 1, t).theta0,
                }))
            }
            fd => fd.clone(),
        };
        SuperFunction::from_parts(self.q, self.parity.map(Parity::flip), value, derivative)
    }
}

/// `(D f)(t, ·)`: θ⁰ part `f₁(t)`, θ¹ part `f₀′(t)`.
pub fn apply_d(f: &SuperFunction, t: f64) -> Result<SuperValue> {
    f.apply_d().eval(t)
}

type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `ev*(f) = f + θ df` for a function on a chart, evaluated on points of ΠTM.
#[derive(Clone)]
pub struct EvPullback {
    f: ScalarField,
    df: GradientField,
}

impl EvPullback {
    /// θ⁰ part `f(x)`, θ¹ part `Σ_j ∂_j f(x) ψ^j`.
    pub fn at(&self, x: &[f64], psi: &[GrassmannElement], q: usize) -> Result<SuperValue> {
        let grad = (self.df)(x);
        if grad.len() != x.len() || psi.len() != x.len() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, gradient {}, odd tangent {}",
                x.len(),
                grad.len(),
                psi.len()
            )));
        }
        let mut theta1 = GrassmannElement::try_zero(q)?;
        for (g, p) in grad.iter().zip(psi) {
            if p.num_generators() != q {
                return Err(Error::Dimension("odd tangent generator count".into()));
            }
            p.require_parity(Parity::Odd, "odd tangent component")?;
            theta1.axpy(Complex64::from(*g), p);
        }
        Ok(SuperValue::new(
            GrassmannElement::scalar(q, Complex64::from((self.f)(x))),
            theta1,
        ))
    }
}

/// Builds `ev*(f)` after checking `df` against central differences of `f`
/// at the sample points (relative tolerance `tol`).
pub fn pullback_ev(
    f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    df: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<EvPullback> {
    let h = 1e-5;
    for x in samples {
        let grad = df(x);
        if grad.len() != x.len() {
            return Err(Error::Dimension("gradient length".into()));
        }
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            if (fd - grad[j]).abs() > tol * grad[j].abs().max(1.0) {
                return Err(Error::Consistency(format!(
                    "df component {j} at {x:?} is {} but finite differences give {fd}",
                    grad[j]
                )));
            }
        }
    }
    Ok(EvPullback {
        f: Arc::new(f),
        df: Arc::new(df),
    })
}
