//! Pointwise exterior algebra `Λ(R^n)* ⊗ End(C^d)`.
//!
//! A [`FormValue`] stores one `d×d` complex matrix per covector subset `I`
//! (bit `j` of the mask stands for `dx^{j+1}`), representing `Σ_I dx^I ⊗ M_I`
//! with `I` ascending.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grassmann::koszul_sign;
use crate::linalg::{self, CMatrix, RMatrix};

/// Largest supported chart dimension.
pub const MAX_BASE_DIM: usize = 6;

pub const DEFAULT_EXP_TOL: f64 = 1e-12;

/// A chart-coordinate velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector(pub Vec<f64>);

impl TangentVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("non-finite tangent vector".into()));
        }
        Ok(Self(components))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormValue {
    n: usize,
    d: usize,
    coeffs: Vec<CMatrix>,
}

impl FormValue {
    pub fn zero(n: usize, d: usize) -> Self {
        assert!(n <= MAX_BASE_DIM, "chart dimension {n} exceeds {MAX_BASE_DIM}");
        Self {
            n,
            d,
            coeffs: vec![CMatrix::zeros(d, d); 1 << n],
        }
    }

    pub fn identity(n: usize, d: usize) -> Self {
        Self::from_matrix(n, linalg::identity(d))
    }

    /// Degree-0 form with the given fiber matrix.
    pub fn from_matrix(n: usize, m: CMatrix) -> Self {
        Self::basis(n, 0, m)
    }

    /// `dx^I ⊗ m`.
    pub fn basis(n: usize, mask: usize, m: CMatrix) -> Self {
        assert!(m.is_square());
        let mut f = Self::zero(n, m.nrows());
        assert!(mask < 1 << n, "mask out of range");
        f.coeffs[mask] = m;
        f
    }

    /// Scalar (`d = 1`) form `z dx^I`.
    pub fn scalar(n: usize, mask: usize, z: Complex64) -> Self {
        Self::basis(n, mask, CMatrix::from_element(1, 1, z))
    }

    pub fn from_coeffs(n: usize, d: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        if n > MAX_BASE_DIM || coeffs.len() != 1 << n {
            return Err(Error::Dimension(format!("expected 2^{n} coefficients")));
        }
        if coeffs.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Dimension(format!("coefficients must be {d}x{d}")));
        }
        Ok(Self { n, d, coeffs })
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn fiber_rank(&self) -> usize {
        self.d
    }

    pub fn coeff(&self, mask: usize) -> &CMatrix {
        &self.coeffs[mask]
    }

    pub fn coeff_mut(&mut self, mask: usize) -> &mut CMatrix {
        &mut self.coeffs[mask]
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    /// Mask of the top-degree monomial `dx^1 ∧ … ∧ dx^n`.
    pub fn top_mask(&self) -> usize {
        (1 << self.n) - 1
    }

    /// The `(0,0)` entry of a coefficient; convenient for scalar forms.
    pub fn scalar_coeff(&self, mask: usize) -> Complex64 {
        self.coeffs[mask][(0, 0)]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(linalg::is_finite)
    }

    /// Largest entry modulus over all coefficients.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, m| a.max(linalg::max_abs(m)))
    }

    /// Sum over masks of the matrix 1-norms; submultiplicative under wedge.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(linalg::norm1).sum()
    }

    pub fn has_odd_degree(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .any(|(m, c)| m.count_ones() % 2 == 1 && c.iter().any(|z| z.re != 0.0 || z.im != 0.0))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(Error::Dimension(format!(
                "forms on (n={}, d={}) and (n={}, d={})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, ..*self })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(Complex64::from(-1.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|m| m * s).collect(),
            ..*self
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        assert!(self.n == other.n && self.d == other.d, "form shapes differ");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    /// Applies a fiber-wise linear map to every coefficient.
    pub fn map_fiber(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let coeffs: Vec<CMatrix> = self.coeffs.iter().map(f).collect();
        let d = coeffs[0].nrows();
        Self { n: self.n, d, coeffs }
    }

    /// Left multiplication by a degree-0 matrix.
    pub fn left_matrix(&self, m: &CMatrix) -> Self {
        self.map_fiber(|c| m * c)
    }

    /// Pullback along a linear map whose `n×k` matrix sends sub-chart
    /// tangent vectors to ambient ones: `dx^i ↦ Σ_a J[i][a] du^a`.
    pub fn pullback(&self, jacobian: &RMatrix) -> Result<FormValue> {
        if jacobian.nrows() != self.n {
            return Err(Error::Dimension(format!(
                "pullback matrix has {} rows for a form on {} coordinates",
                jacobian.nrows(),
                self.n
            )));
        }
        let k = jacobian.ncols();
        if k > MAX_BASE_DIM {
            return Err(Error::Dimension("pullback target too large".into()));
        }
        let pulled: Vec<FormValue> = (0..self.n)
            .map(|i| {
                let mut f = FormValue::zero(k, 1);
                for a in 0..k {
                    f.coeffs[1 << a][(0, 0)] = Complex64::from(jacobian[(i, a)]);
                }
                f
            })
            .collect();
        let mut out = FormValue::zero(k, self.d);
        for (mask, m) in self.coeffs.iter().enumerate() {
            if linalg::max_abs(m) == 0.0 {
                continue;
            }
            let mut mono = FormValue::scalar(k, 0, Complex64::from(1.0));
            for (i, p) in pulled.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    mono = wedge(&mono, p)?;
                }
            }
            for (target, z) in mono.coeffs.iter().enumerate() {
                let z = z[(0, 0)];
                if z != Complex64::from(0.0) {
                    out.coeffs[target] += m * z;
                }
            }
        }
        Ok(out)
    }
}

/// Wedge product; fiber coefficients multiply in order.
pub fn wedge(x: &FormValue, y: &FormValue) -> Result<FormValue> {
    x.check_compatible(y)?;
    let mut out = FormValue::zero(x.n, x.d);
    for (a, ma) in x.coeffs.iter().enumerate() {
        if linalg::max_abs(ma) == 0.0 {
            continue;
        }
        for (b, mb) in y.coeffs.iter().enumerate() {
            if a & b != 0 || linalg::max_abs(mb) == 0.0 {
                continue;
            }
            out.coeffs[a | b] += ma * mb * Complex64::from(koszul_sign(a, b));
        }
    }
    Ok(out)
}

/// Interior product `ι_v`, an odd antiderivation lowering degree by one.
pub fn contract(v: &TangentVector, x: &FormValue) -> Result<FormValue> {
    if v.dim() != x.n {
        return Err(Error::Dimension(format!(
            "vector of dimension {} against forms on {} coordinates",
            v.dim(),
            x.n
        )));
    }
    let mut out = FormValue::zero(x.n, x.d);
    for (mask, m) in x.coeffs.iter().enumerate() {
        let mut rest = mask;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if v.0[j] == 0.0 {
                continue;
            }
            let pos = (mask & ((1 << j) - 1)).count_ones();
            let sign = if pos.is_multiple_of(2) { 1.0 } else { -1.0 };
            out.coeffs[mask & !(1 << j)] += m * Complex64::from(sign * v.0[j]);
        }
    }
    Ok(out)
}

/// Fiber trace of every coefficient.
pub fn trace(x: &FormValue) -> FormValue {
    x.map_fiber(|m| CMatrix::from_element(1, 1, m.trace()))
}

/// Keeps only the degree-`k` part.
pub fn grade_project(x: &FormValue, k: usize) -> Result<FormValue> {
    if k > x.n {
        return Err(Error::Range(format!("degree {k} on a {}-dimensional chart", x.n)));
    }
    let mut out = FormValue::zero(x.n, x.d);
    for (mask, m) in x.coeffs.iter().enumerate() {
        if mask.count_ones() as usize == k {
            out.coeffs[mask] = m.clone();
        }
    }
    Ok(out)
}

/// Exponential of an even form by scaling and squaring with a truncated
/// series. Nilpotent higher-degree parts make the series in them terminate.
pub fn exp_even(x: &FormValue, tol: f64) -> Result<FormValue> {
    if x.has_odd_degree() {
        return Err(Error::Parity("exp_even requires an even form".into()));
    }
    if !x.is_finite() {
        return Err(Error::Numeric("non-finite form entries".into()));
    }
    let norm = x.norm();
    let mut squarings = 0i32;
    let mut scale = 1.0;
    while norm * scale >= 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let threshold = (0.1 * tol / 2f64.powi(squarings)).max(0.5 * f64::EPSILON);
    let a = x.scale(Complex64::from(scale));
    let mut result = FormValue::identity(x.n, x.d);
    let mut term = result.clone();
    for k in 1..80 {
        term = wedge(&term, &a)?.scale(Complex64::from(1.0 / k as f64));
        result.axpy(Complex64::from(1.0), &term);
        if term.norm() <= threshold * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = wedge(&result, &result)?;
    }
    if !result.is_finite() {
        return Err(Error::Numeric("exp_even overflowed".into()));
    }
    Ok(result)
}

#[derive(Serialize, Deserialize)]
struct Cplx {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct CoeffRepr {
    mask: usize,
    matrix: Vec<Vec<Cplx>>,
}

#[derive(Serialize, Deserialize)]
struct FormRepr {
    n: usize,
    d: usize,
    coeffs: Vec<CoeffRepr>,
}

impl Serialize for FormValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, m)| linalg::max_abs(m) != 0.0)
            .map(|(mask, m)| CoeffRepr {
                mask,
                matrix: (0..m.nrows())
                    .map(|i| {
                        (0..m.ncols())
                            .map(|j| Cplx {
                                re: m[(i, j)].re,
                                im: m[(i, j)].im,
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        FormRepr {
            n: self.n,
            d: self.d,
            coeffs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FormValue {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = FormRepr::deserialize(de)?;
        if repr.n > MAX_BASE_DIM {
            return Err(D::Error::custom(format!("n = {} exceeds {MAX_BASE_DIM}", repr.n)));
        }
        let mut f = FormValue::zero(repr.n, repr.d);
        for c in repr.coeffs {
            if c.mask >= 1 << repr.n {
                return Err(D::Error::custom(format!("mask {} out of range", c.mask)));
            }
            if c.matrix.len() != repr.d || c.matrix.iter().any(|r| r.len() != repr.d) {
                return Err(D::Error::custom(format!(
                    "coefficient at mask {} is not {}x{}",
                    c.mask, repr.d, repr.d
                )));
            }
            for (i, row) in c.matrix.iter().enumerate() {
                for (j, z) in row.iter().enumerate() {
                    f.coeffs[c.mask][(i, j)] += Complex64::new(z.re, z.im);
                }
            }
        }
        Ok(f)
    }
}
