//! Constant super connections `A = dθ⊗α + θdθ⊗a` on R^{0|1} and their gauge
//! transformations.
//!
//! Symbols are ordered with the form part on the left. Swapping two symbols
//! of cohomological degrees `c, c'` and parities `p, p'` costs
//! `(-1)^{cc' + pp'}`; `θ` has `(0, odd)`, `dθ` has `(1, odd)` and Grassmann
//! coefficients have `(0, p)`.

use num_complex::Complex64;

use super::element::Parity;
use super::matrix::GrassmannMatrix;
use crate::error::{Error, Result};

/// `c0 + θ c1` with matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaFunction {
    pub c0: GrassmannMatrix,
    pub c1: GrassmannMatrix,
}

impl ThetaFunction {
    fn mul(&self, other: &Self) -> Self {
        // (c0 + θc1)(e0 + θe1) = c0e0 + θ(ĉ0 e1 + c1 e0)
        let c0 = &self.c0 * &other.c0;
        let c1 = &(&self.c0.involution() * &other.c1) + &(&self.c1 * &other.c0);
        Self { c0, c1 }
    }
}

/// A gauge map `g: R^{0|1} → G`, stored as `g₀ + θ g₁` with `g₀` even and
/// invertible and `g₁` odd.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeMap(ThetaFunction);

impl GaugeMap {
    pub fn identity(m: usize, q: usize) -> Self {
        GaugeMap(ThetaFunction {
            c0: GrassmannMatrix::identity(m, q),
            c1: GrassmannMatrix::zeros(m, m, q),
        })
    }

    /// `exp(θβ) = 1 + θβ` for an odd Lie-algebra valued `β`.
    pub fn odd_exponent(beta: &GrassmannMatrix) -> Result<Self> {
        beta.require_parity(Parity::Odd, "odd gauge exponent")?;
        square(beta)?;
        Ok(GaugeMap(ThetaFunction {
            c0: GrassmannMatrix::identity(beta.nrows(), beta.num_generators()),
            c1: beta.clone(),
        }))
    }

    /// `exp(b)` for an even, θ-independent exponent.
    pub fn even_exponent(b: &GrassmannMatrix) -> Result<Self> {
        b.require_parity(Parity::Even, "even gauge exponent")?;
        square(b)?;
        Ok(GaugeMap(ThetaFunction {
            c0: b.exp()?,
            c1: GrassmannMatrix::zeros(b.nrows(), b.ncols(), b.num_generators()),
        }))
    }

    /// Pointwise product `self · other`.
    pub fn then(&self, other: &GaugeMap) -> GaugeMap {
        GaugeMap(self.0.mul(&other.0))
    }

    pub fn inverse(&self) -> Result<GaugeMap> {
        let h0 = self.0.c0.inverse()?;
        let h1 = (&(&h0 * &self.0.c1) * &h0).scale(Complex64::from(-1.0));
        Ok(GaugeMap(ThetaFunction { c0: h0, c1: h1 }))
    }

    pub fn parts(&self) -> &ThetaFunction {
        &self.0
    }
}

fn square(m: &GrassmannMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("gauge exponent must be square".into()));
    }
    Ok(())
}

/// `A = dθ⊗α + θdθ⊗a`, α odd and a even, both Lie-algebra valued.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperConnectionForm {
    pub alpha: GrassmannMatrix,
    pub a: GrassmannMatrix,
}

impl SuperConnectionForm {
    pub fn new(alpha: GrassmannMatrix, a: GrassmannMatrix) -> Result<Self> {
        let form = Self { alpha, a };
        form.validate()?;
        Ok(form)
    }

    /// The constant connection `θdθ⊗a`.
    pub fn constant(a: GrassmannMatrix) -> Result<Self> {
        let alpha = GrassmannMatrix::zeros(a.nrows(), a.ncols(), a.num_generators());
        Self::new(alpha, a)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.require_parity(Parity::Odd, "α")?;
        self.a.require_parity(Parity::Even, "a")?;
        if self.alpha.nrows() != self.a.nrows()
            || self.alpha.ncols() != self.a.ncols()
            || self.alpha.num_generators() != self.a.num_generators()
        {
            return Err(Error::Dimension("α and a shapes differ".into()));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.alpha - &other.alpha)
            .max_abs()
            .max((&self.a - &other.a).max_abs())
    }

    fn left_mul(f: &ThetaFunction, w: &Self) -> Self {
        // f·ω = dθ(f̂0 P0) + θdθ(f0 P1 + f̂1 P0)
        Self {
            alpha: &f.c0.involution() * &w.alpha,
            a: &(&f.c0 * &w.a) + &(&f.c1.involution() * &w.alpha),
        }
    }

    fn right_mul(w: &Self, f: &ThetaFunction) -> Self {
        // ω·f = dθ(P0 f0) + θdθ(P1 f0 − P̂0 f1)
        Self {
            alpha: &w.alpha * &f.c0,
            a: &(&w.a * &f.c0) - &(&w.alpha.involution() * &f.c1),
        }
    }
}

/// Right gauge action `A ↦ g⁻¹ A g + g⁻¹ dg`. Applying `g` then `g'` equals
/// applying `g·g'`.
pub fn gauge_transform(conn: &SuperConnectionForm, g: &GaugeMap) -> Result<SuperConnectionForm> {
    conn.validate()?;
    let parts = g.parts();
    if parts.c0.nrows() != conn.a.nrows() || parts.c0.num_generators() != conn.a.num_generators() {
        return Err(Error::Dimension("gauge map and connection shapes differ".into()));
    }
    let inv = g.inverse()?;
    let conjugated = SuperConnectionForm::right_mul(&SuperConnectionForm::left_mul(inv.parts(), conn), parts);
    // dg = dθ ⊗ g₁
    let dg = SuperConnectionForm {
        alpha: parts.c1.clone(),
        a: GrassmannMatrix::zeros(conn.a.nrows(), conn.a.ncols(), conn.a.num_generators()),
    };
    let mc = SuperConnectionForm::left_mul(inv.parts(), &dg);
    Ok(SuperConnectionForm {
        alpha: &conjugated.alpha + &mc.alpha,
        a: &conjugated.a + &mc.a,
    })
}

/// Gauge map `e^{-θα}` removing the `dθ⊗α` component.
pub fn reducing_gauge(conn: &SuperConnectionForm) -> Result<GaugeMap> {
    GaugeMap::odd_exponent(&conn.alpha.scale(Complex64::from(-1.0)))
}
