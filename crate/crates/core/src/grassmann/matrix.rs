use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::element::{GrassmannElement, Parity};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Dense matrix with entries in a Grassmann algebra. Used for Lie-algebra
/// valued Grassmann data and for fundamental solutions of the transport ODE.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannMatrix {
    rows: usize,
    cols: usize,
    q: usize,
    entries: Vec<GrassmannElement>,
}

impl GrassmannMatrix {
    pub fn zeros(rows: usize, cols: usize, q: usize) -> Self {
        Self {
            rows,
            cols,
            q,
            entries: vec![GrassmannElement::zero(q); rows * cols],
        }
    }

    pub fn identity(d: usize, q: usize) -> Self {
        Self::from_complex(&linalg::identity(d), q)
    }

    /// Embeds a complex matrix as body-only entries.
    pub fn from_complex(m: &CMatrix, q: usize) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols(), q);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.entries[i * m.ncols() + j] = GrassmannElement::scalar(q, m[(i, j)]);
            }
        }
        out
    }

    /// `coefficient * m`, a complex matrix tensored with one Grassmann element.
    pub fn from_tensor(m: &CMatrix, coefficient: &GrassmannElement) -> Self {
        let q = coefficient.num_generators();
        let mut out = Self::zeros(m.nrows(), m.ncols(), q);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.entries[i * m.ncols() + j] = coefficient.scale(m[(i, j)]);
            }
        }
        out
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        q: usize,
        mut f: impl FnMut(usize, usize) -> GrassmannElement,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                if e.num_generators() != q {
                    return Err(Error::Dimension("entry generator count".into()));
                }
                entries.push(e);
            }
        }
        Ok(Self { rows, cols, q, entries })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn num_generators(&self) -> usize {
        self.q
    }

    pub fn entry(&self, i: usize, j: usize) -> &GrassmannElement {
        &self.entries[i * self.cols + j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, value: GrassmannElement) {
        assert_eq!(value.num_generators(), self.q);
        self.entries[i * self.cols + j] = value;
    }

    /// Complex matrix of coefficients at one monomial mask.
    pub fn coefficient_matrix(&self, mask: usize) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).coeff(mask))
    }

    pub fn body(&self) -> CMatrix {
        self.coefficient_matrix(0)
    }

    pub fn is_even(&self) -> bool {
        self.entries.iter().all(GrassmannElement::is_even)
    }

    pub fn is_odd(&self) -> bool {
        self.entries.iter().all(GrassmannElement::is_odd)
    }

    pub fn require_parity(&self, p: Parity, what: &str) -> Result<()> {
        let ok = match p {
            Parity::Even => self.is_even(),
            Parity::Odd => self.is_odd(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parity(format!("{what} must have {p:?} entries")))
        }
    }

    pub fn involution(&self) -> Self {
        self.map(GrassmannElement::involution)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|e| e.scale(s))
    }

    /// Left multiplication of every entry by a Grassmann scalar.
    pub fn left_scalar(&self, s: &GrassmannElement) -> Self {
        self.map(|e| s * e)
    }

    fn map(&self, f: impl Fn(&GrassmannElement) -> GrassmannElement) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            q: self.q,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a.max(e.max_abs()))
    }

    /// Max row sum of entry l1 norms; submultiplicative.
    pub fn norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.entry(i, j).norm_l1()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> GrassmannElement {
        let mut t = GrassmannElement::zero(self.q);
        for i in 0..self.rows.min(self.cols) {
            t += self.entry(i, i);
        }
        t
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        assert!(self.same_shape(other), "Grassmann matrix shape mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.axpy(s, b);
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.q == other.q
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.q != other.q {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} (q={}) by {}x{} (q={})",
                self.rows, self.cols, self.q, other.rows, other.cols, other.q
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols, self.q);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a.max_abs() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other.entry(k, j);
                    out.entries[i * other.cols + j] += &prod;
                }
            }
        }
        Ok(out)
    }

    /// Exponential of an even square matrix by scaling and squaring.
    pub fn exp(&self) -> Result<Self> {
        self.require_parity(Parity::Even, "exponent")?;
        if self.rows != self.cols {
            return Err(Error::Dimension("exp of a non-square matrix".into()));
        }
        let norm = self.norm();
        if !norm.is_finite() {
            return Err(Error::Numeric("non-finite exponent".into()));
        }
        let mut squarings = 0;
        let mut scale = 1.0;
        while norm * scale >= 0.5 {
            scale *= 0.5;
            squarings += 1;
        }
        let a = self.scale(Complex64::from(scale));
        let mut result = Self::identity(self.rows, self.q);
        let mut term = result.clone();
        for k in 1..60 {
            term = &term * &a;
            term = term.scale(Complex64::from(1.0 / k as f64));
            result.axpy(Complex64::from(1.0), &term);
            if term.norm() <= f64::EPSILON * result.norm() {
                break;
            }
        }
        for _ in 0..squarings {
            result = &result * &result;
        }
        Ok(result)
    }

    /// Inverse of an even matrix with invertible body: `B(1 + N)` with `N`
    /// nilpotent, inverted by the terminating Neumann series.
    pub fn inverse(&self) -> Result<Self> {
        self.require_parity(Parity::Even, "inverted matrix")?;
        let body_inv = Self::from_complex(&linalg::inverse(&self.body())?, self.q);
        let nil = &(&body_inv * self) - &Self::identity(self.rows, self.q);
        let mut sum = Self::identity(self.rows, self.q);
        let mut term = sum.clone();
        for _ in 0..self.q {
            term = (&term * &nil).scale(Complex64::from(-1.0));
            sum.axpy(Complex64::from(1.0), &term);
        }
        Ok(&sum * &body_inv)
    }
}

impl Add for &GrassmannMatrix {
    type Output = GrassmannMatrix;
    fn add(self, rhs: Self) -> GrassmannMatrix {
        let mut out = self.clone();
        out.axpy(Complex64::from(1.0), rhs);
        out
    }
}

impl Sub for &GrassmannMatrix {
    type Output = GrassmannMatrix;
    fn sub(self, rhs: Self) -> GrassmannMatrix {
        let mut out = self.clone();
        out.axpy(Complex64::from(-1.0), rhs);
        out
    }
}

impl Mul for &GrassmannMatrix {
    type Output = GrassmannMatrix;
    fn mul(self, rhs: Self) -> GrassmannMatrix {
        self.try_mul(rhs).expect("Grassmann matrix product")
    }
}
