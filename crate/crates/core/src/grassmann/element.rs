use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported number of odd generators.
pub const MAX_GENERATORS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_mask(mask: usize) -> Self {
        if mask.count_ones().is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }
}

/// Sign picked up when the ascending monomial `a` is multiplied on the right by
/// the ascending monomial `b` and the result is sorted. Masks must be disjoint
/// for the product to be nonzero, but the sign is defined regardless.
#[inline]
pub fn koszul_sign(a: usize, b: usize) -> f64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Element of the complex Grassmann algebra on `q` generators, stored densely
/// over the `2^q` generator subsets.
#[derive(Clone, PartialEq)]
pub struct GrassmannElement {
    q: usize,
    coeffs: Vec<Complex64>,
}

impl GrassmannElement {
    pub fn zero(q: usize) -> Self {
        assert!(q <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        Self {
            q,
            coeffs: vec![Complex64::new(0.0, 0.0); 1 << q],
        }
    }

    pub fn try_zero(q: usize) -> Result<Self> {
        if q > MAX_GENERATORS {
            return Err(Error::Dimension(format!(
                "{q} generators exceeds the budget of {MAX_GENERATORS}"
            )));
        }
        Ok(Self::zero(q))
    }

    pub fn scalar(q: usize, value: Complex64) -> Self {
        Self::monomial(q, 0, value)
    }

    pub fn one(q: usize) -> Self {
        Self::scalar(q, Complex64::new(1.0, 0.0))
    }

    /// The generator `theta_j` (0-based).
    pub fn generator(q: usize, j: usize) -> Self {
        assert!(j < q, "generator index {j} out of range for q = {q}");
        Self::monomial(q, 1 << j, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(q: usize, mask: usize, value: Complex64) -> Self {
        let mut e = Self::zero(q);
        assert!(mask < e.coeffs.len(), "mask {mask:#b} out of range");
        e.coeffs[mask] = value;
        e
    }

    pub fn from_coeffs(q: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if q > MAX_GENERATORS || coeffs.len() != 1 << q {
            return Err(Error::Dimension(format!(
                "expected 2^{q} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { q, coeffs })
    }

    pub fn num_generators(&self) -> usize {
        self.q
    }

    pub fn coeff(&self, mask: usize) -> Complex64 {
        self.coeffs[mask]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, mask: usize, value: Complex64) {
        self.coeffs[mask] = value;
    }

    /// Coefficient of the empty monomial.
    pub fn body(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Nonzero `(mask, coefficient)` pairs in ascending mask order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
            .map(|(m, z)| (m, *z))
    }

    fn projected(&self, keep: Parity) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, z)| {
                if Parity::of_mask(m) == keep {
                    *z
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self { q: self.q, coeffs }
    }

    pub fn even_part(&self) -> Self {
        self.projected(Parity::Even)
    }

    pub fn odd_part(&self) -> Self {
        self.projected(Parity::Odd)
    }

    fn vanishes_on(&self, p: Parity) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(m, z)| Parity::of_mask(m) != p || (z.re == 0.0 && z.im == 0.0))
    }

    pub fn is_even(&self) -> bool {
        self.vanishes_on(Parity::Odd)
    }

    pub fn is_odd(&self) -> bool {
        self.vanishes_on(Parity::Even)
    }

    /// `Some(p)` when the element is homogeneous; zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        if self.is_even() {
            Some(Parity::Even)
        } else if self.is_odd() {
            Some(Parity::Odd)
        } else {
            None
        }
    }

    pub fn require_parity(&self, p: Parity, what: &str) -> Result<()> {
        let ok = match p {
            Parity::Even => self.is_even(),
            Parity::Odd => self.is_odd(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parity(format!("{what} must be {p:?}")))
        }
    }

    /// Grading involution: negates odd monomials.
    pub fn involution(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, z)| if Parity::of_mask(m).is_odd() { -z } else { *z })
            .collect();
        Self { q: self.q, coeffs }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            q: self.q,
            coeffs: self.coeffs.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Sum of coefficient moduli; submultiplicative.
    pub fn norm_l1(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).sum()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.q != other.q {
            return Err(Error::Dimension(format!(
                "Grassmann generator counts differ: {} vs {}",
                self.q, other.q
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.add_unchecked(other, 1.0))
    }

    fn add_unchecked(&self, other: &Self, sign: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b * sign)
            .collect();
        Self { q: self.q, coeffs }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        assert_eq!(self.q, other.q, "Grassmann generator counts differ");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    /// Sign-correct product; fails when the generator counts differ.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for (a, za) in self.terms() {
            for (b, zb) in other.terms() {
                if a & b != 0 {
                    continue;
                }
                out[a | b] += za * zb * koszul_sign(a, b);
            }
        }
        Self { q: self.q, coeffs: out }
    }
}

/// Product with the dimension check surfaced as an error.
pub fn grassmann_mul(x: &GrassmannElement, y: &GrassmannElement) -> Result<GrassmannElement> {
    x.try_mul(y)
}

impl fmt::Debug for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grassmann[q={}](", self.q)?;
        let mut first = true;
        for (m, z) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({z})")?;
            for j in 0..self.q {
                if m & (1 << j) != 0 {
                    write!(f, "θ{}", j + 1)?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl Add for &GrassmannElement {
    type Output = GrassmannElement;
    fn add(self, rhs: Self) -> GrassmannElement {
        assert_eq!(self.q, rhs.q, "Grassmann generator counts differ");
        self.add_unchecked(rhs, 1.0)
    }
}

impl Sub for &GrassmannElement {
    type Output = GrassmannElement;
    fn sub(self, rhs: Self) -> GrassmannElement {
        assert_eq!(self.q, rhs.q, "Grassmann generator counts differ");
        self.add_unchecked(rhs, -1.0)
    }
}

impl Mul for &GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: Self) -> GrassmannElement {
        assert_eq!(self.q, rhs.q, "Grassmann generator counts differ");
        self.mul_unchecked(rhs)
    }
}

impl Neg for &GrassmannElement {
    type Output = GrassmannElement;
    fn neg(self) -> GrassmannElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl AddAssign<&GrassmannElement> for GrassmannElement {
    fn add_assign(&mut self, rhs: &GrassmannElement) {
        self.axpy(Complex64::new(1.0, 0.0), rhs);
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    mask: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    q: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for GrassmannElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            q: self.q,
            terms: self
                .terms()
                .map(|(mask, z)| TermRepr {
                    mask,
                    re: z.re,
                    im: z.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GrassmannElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ElementRepr::deserialize(d)?;
        let mut e = GrassmannElement::try_zero(repr.q).map_err(D::Error::custom)?;
        for t in repr.terms {
            if t.mask >= 1 << repr.q {
                return Err(D::Error::custom(format!(
                    "mask {} out of range for q = {}",
                    t.mask, repr.q
                )));
            }
            e.coeffs[t.mask] += Complex64::new(t.re, t.im);
        }
        Ok(e)
    }
}
