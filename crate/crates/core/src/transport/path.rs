use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{GrassmannElement, Parity, MAX_GENERATORS};

/// Even part of a super path, parametrized by `s = t / circumference ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathShape {
    Constant {
        point: Vec<f64>,
    },
    /// `center + radius·(cos 2π·turns·s, sin 2π·turns·s)` in the first two
    /// coordinates.
    Circle {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        turns: f64,
    },
    /// Piecewise linear through `points` with equal parameter per segment.
    /// The velocity jumps at interior vertices, where RK4 drops to first order.
    #[serde(rename = "custom-polyline")]
    Polyline {
        points: Vec<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

impl PathShape {
    pub fn dim(&self) -> usize {
        match self {
            PathShape::Constant { point } => point.len(),
            PathShape::Circle { center, .. } => center.len(),
            PathShape::Polyline { points } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PathShape::Constant { .. } => Ok(()),
            PathShape::Circle { center, radius, turns } => {
                if center.len() < 2 {
                    return Err(Error::Dimension("circle paths need at least two coordinates".into()));
                }
                if !(radius.is_finite() && *radius >= 0.0 && turns.is_finite()) {
                    return Err(Error::Validation("circle radius and turns must be finite".into()));
                }
                Ok(())
            }
            PathShape::Polyline { points } => {
                if points.len() < 2 {
                    return Err(Error::Validation("polyline needs at least two points".into()));
                }
                let n = points[0].len();
                if points.iter().any(|p| p.len() != n) {
                    return Err(Error::Dimension("polyline points differ in dimension".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, PathShape::Constant { .. })
    }

    /// Position and `d/ds` at parameter `s`.
    pub fn eval(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            PathShape::Constant { point } => (point.clone(), vec![0.0; point.len()]),
            PathShape::Circle { center, radius, turns } => {
                let w = TAU * turns;
                let (sin, cos) = (w * s).sin_cos();
                let mut x = center.clone();
                let mut v = vec![0.0; center.len()];
                x[0] += radius * cos;
                x[1] += radius * sin;
                v[0] = -radius * w * sin;
                v[1] = radius * w * cos;
                (x, v)
            }
            PathShape::Polyline { points } => {
                let segments = (points.len() - 1) as f64;
                let u = (s.clamp(0.0, 1.0) * segments).min(segments - 1e-15 * segments);
                let k = (u.floor() as usize).min(points.len() - 2);
                let frac = u - k as f64;
                let (a, b) = (&points[k], &points[k + 1]);
                let x = a.iter().zip(b).map(|(a, b)| a + frac * (b - a)).collect();
                let v = a.iter().zip(b).map(|(a, b)| segments * (b - a)).collect();
                (x, v)
            }
        }
    }
}

pub type OddFn = Arc<dyn Fn(f64) -> Vec<GrassmannElement> + Send + Sync>;

/// Odd part `ψ(t)` of a super path: one odd Grassmann element per coordinate.
#[derive(Clone)]
pub enum OddData {
    Constant(Vec<GrassmannElement>),
    Function(OddFn),
}

impl fmt::Debug for OddData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OddData::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            OddData::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// A super path `ℝ^{1|1} × S → M` in components.
#[derive(Clone, Debug)]
pub struct SuperPath {
    pub shape: PathShape,
    pub odd: OddData,
    q: usize,
}

impl SuperPath {
    pub fn new(shape: PathShape, odd: OddData, q: usize) -> Result<Self> {
        shape.validate()?;
        if q > MAX_GENERATORS {
            return Err(Error::Dimension(format!("{q} generators exceed {MAX_GENERATORS}")));
        }
        let path = Self { shape, odd, q };
        path.check_odd(&path.psi(0.0))?;
        Ok(path)
    }

    /// Constant super path at `x` with `ψ^j` the `j`-th generator, so that
    /// functions of `ψ` are differential forms at `x`.
    pub fn constant_generic(point: Vec<f64>) -> Self {
        let n = point.len();
        Self::with_generators(PathShape::Constant { point }, n)
    }

    /// `shape` with `ψ^j = θ_j` on `n` generators.
    pub fn with_generators(shape: PathShape, n: usize) -> Self {
        let psi = (0..n).map(|j| GrassmannElement::generator(n, j)).collect();
        Self::new(shape, OddData::Constant(psi), n).expect("generator super path")
    }

    /// Purely even path (`ψ ≡ 0`).
    pub fn even(shape: PathShape) -> Result<Self> {
        let n = shape.dim();
        Self::new(shape, OddData::Constant(vec![GrassmannElement::zero(0); n]), 0)
    }

    pub fn num_generators(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Constant in the sense of factoring through even translations.
    pub fn is_constant(&self) -> bool {
        self.shape.is_constant() && matches!(self.odd, OddData::Constant(_))
    }

    pub fn psi(&self, t: f64) -> Vec<GrassmannElement> {
        match &self.odd {
            OddData::Constant(v) => v.clone(),
            OddData::Function(f) => f(t),
        }
    }

    pub fn check_odd(&self, psi: &[GrassmannElement]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} odd components for a path in {} coordinates",
                psi.len(),
                self.dim()
            )));
        }
        for p in psi {
            if p.num_generators() != self.q {
                return Err(Error::Dimension("odd component generator count".into()));
            }
            p.require_parity(Parity::Odd, "odd path component")?;
        }
        Ok(())
    }

    /// Position and `dx/dt` at time `t` for a loop of the given circumference.
    pub fn position(&self, t: f64, circumference: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, v) = self.shape.eval(t / circumference);
        (x, v.into_iter().map(|v| v / circumference).collect())
    }
}
