//! The bouquet of Chern characters `g ↦ Tr(c(g)·e^{F(X)})` on fixed-point
//! strata, its axioms, and quadrature of top-degree forms.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{self, FormValue, TangentVector, DEFAULT_EXP_TOL};
use crate::geometry::{self, Chart, EquivariantGeometry, FixedStratum, CENTRALIZER_TOL, DEFAULT_DERIVATIVE_STEP};
use crate::linalg::{self, c, CMatrix, RMatrix, I};

/// Scaling applied to `F(X)` before exponentiating.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    Raw,
    /// `F(X) ↦ (i/2π)·F(X)`, so that top-degree integrals are Chern numbers.
    #[serde(alias = "chern-integer")]
    Chern,
}

impl Normalization {
    pub fn factor(self) -> Complex64 {
        match self {
            Normalization::Raw => c(1.0, 0.0),
            Normalization::Chern => I / TAU,
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "chern" | "chern-integer" => Ok(Normalization::Chern),
            other => Err(Error::Validation(format!(
                "unknown normalization '{other}' (raw | chern)"
            ))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Raw => "raw",
            Normalization::Chern => "chern",
        })
    }
}

/// One petal `α_g(X)` of the bouquet, as a scalar form field on a stratum.
#[derive(Clone, Debug)]
pub struct BouquetEntry {
    pub g: CMatrix,
    pub x: CMatrix,
    pub stratum: FixedStratum,
    pub normalization: Normalization,
    geom: EquivariantGeometry,
}

/// `Ad_g X − X`, by max-abs entry.
pub fn centralizer_residual(geom: &EquivariantGeometry, g: &CMatrix, x: &CMatrix) -> Result<f64> {
    Ok(linalg::max_abs(&(geom.group.adjoint(g, x)? - x)))
}

fn require_centralizer(geom: &EquivariantGeometry, g: &CMatrix, x: &CMatrix) -> Result<()> {
    let r = centralizer_residual(geom, g, x)?;
    if !(r < CENTRALIZER_TOL) {
        return Err(Error::Validation(format!(
            "X is not in the centralizer of g: |Ad_g X − X| = {r:.3e}"
        )));
    }
    Ok(())
}

/// Builds `α_g(X)` on `stratum`, re-validating that the stratum is fixed by `g`.
pub fn chern_character(
    geom: &EquivariantGeometry,
    g: &CMatrix,
    x: &CMatrix,
    stratum: &FixedStratum,
    normalization: Normalization,
) -> Result<BouquetEntry> {
    geom.group.coordinates(x)?;
    require_centralizer(geom, g, x)?;
    let stratum = stratum.for_element(geom, g)?;
    Ok(BouquetEntry {
        g: g.clone(),
        x: x.clone(),
        stratum,
        normalization,
        geom: geom.clone(),
    })
}

/// `Tr(c(g,p)·exp(λ·F(X)(p)))` at an ambient point, before restriction.
pub fn ambient_character(
    geom: &EquivariantGeometry,
    g: &CMatrix,
    x: &CMatrix,
    p: &[f64],
    normalization: Normalization,
) -> Result<FormValue> {
    let fx = geometry::equivariant_curvature(geom, x, p)?.scale(normalization.factor());
    let e = forms::exp_even(&fx, DEFAULT_EXP_TOL)?;
    Ok(forms::trace(&e.left_matrix(&geom.cocycle(g, p))))
}

impl BouquetEntry {
    pub fn geometry(&self) -> &EquivariantGeometry {
        &self.geom
    }

    pub fn label(&self) -> &str {
        &self.stratum.label
    }

    /// The form at stratum coordinates `q`.
    pub fn form_at(&self, q: &[f64]) -> Result<FormValue> {
        self.stratum.sub_chart.require_point(q)?;
        let p = self.stratum.embed(q);
        ambient_character(&self.geom, &self.g, &self.x, &p, self.normalization)?
            .pullback(&self.stratum.embedding_jacobian(q))
    }

    /// `X_M` written in stratum coordinates. `X` commutes with `g`, so its
    /// flow preserves `M^g` and the field is tangent.
    pub fn stratum_vector_field(&self, q: &[f64]) -> Result<TangentVector> {
        let k = self.stratum.dim();
        if k == 0 {
            return Ok(TangentVector::zero(0));
        }
        let p = self.stratum.embed(q);
        let xm = geometry::fundamental_vector_field(&self.geom, &self.x, &p, DEFAULT_DERIVATIVE_STEP)?;
        let jac = self.stratum.embedding_jacobian(q);
        let rhs = RMatrix::from_column_slice(xm.dim(), 1, &xm.0);
        let v = jac
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Numeric(e.to_string()))?;
        let off = (&jac * &v - &rhs).amax();
        if off > 1e-6 {
            return Err(Error::Validation(format!(
                "X_M leaves stratum '{}' at {p:?} (normal part {off:.3e})",
                self.stratum.label
            )));
        }
        TangentVector::new(v.column(0).iter().copied().collect())
    }

    /// Max coefficient of `(d + ι_{X_M}) α` over interior stratum grid points.
    pub fn closedness(&self, grid: usize, h: f64) -> Result<ClosednessReport> {
        let chart = &self.stratum.sub_chart;
        let mut report = ClosednessReport::default();
        let field = |q: &[f64]| self.form_at(q);
        let points = if chart.dim() == 0 {
            chart.grid_points(1)
        } else {
            chart.interior_grid_points(grid)
        };
        for q in points {
            let d = geometry::exterior_derivative(chart, &field, &q, h)?;
            let iota = forms::contract(&self.stratum_vector_field(&q)?, &field(&q)?)?;
            let r = d.try_add(&iota)?.max_abs();
            report.samples += 1;
            if report.worst_point.is_empty() || !(r <= report.max_residual) {
                report.max_residual = r;
                report.worst_point = q;
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosednessReport {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Cartan differential of an ambient field, `d field + ι_{X_M} field`, i.e.
/// `d − ι_{X♯}` for the generator `X♯ = −X_M` of the action on functions.
pub fn equivariant_differential(
    geom: &EquivariantGeometry,
    field: &dyn Fn(&[f64]) -> Result<FormValue>,
    x: &CMatrix,
    p: &[f64],
    h: f64,
) -> Result<FormValue> {
    let d = geometry::exterior_derivative(&geom.chart, field, p, h)?;
    let xm = geometry::fundamental_vector_field(geom, x, p, DEFAULT_DERIVATIVE_STEP)?;
    d.try_add(&forms::contract(&xm, &field(p)?)?)
}

/// Max deviation of `act_h^* α_{hgh⁻¹}(Ad_h X)` from `α_g(X)` on `stratum`.
pub fn bouquet_axiom1(
    geom: &EquivariantGeometry,
    h: &CMatrix,
    g: &CMatrix,
    x: &CMatrix,
    stratum: &FixedStratum,
    normalization: Normalization,
) -> Result<f64> {
    let entry = chern_character(geom, g, x, stratum, normalization)?;
    let hinv = linalg::inverse(h)?;
    let conj = h * g * &hinv;
    let adx = geom.group.adjoint(h, x)?;
    require_centralizer(geom, &conj, &adx)?;
    let mut worst: f64 = 0.0;
    for (q, p) in entry.stratum.samples(entry.stratum.sub_chart.grid) {
        let moved = geom.act(h, &p);
        let fixed = geom.act(&conj, &moved);
        let off = fixed.iter().zip(&moved).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(off < geometry::FIXED_POINT_TOL) {
            return Err(Error::Validation(format!(
                "h does not map stratum '{}' into the fixed set of hgh⁻¹ (residual {off:.3e} at {p:?})",
                stratum.label
            )));
        }
        let there = ambient_character(geom, &conj, &adx, &moved, normalization)?;
        let lhs = there
            .pullback(&geom.act_jacobian(h, &p))?
            .pullback(&entry.stratum.embedding_jacobian(&q))?;
        let rhs = entry.form_at(&q)?;
        worst = worst.max(lhs.try_sub(&rhs)?.max_abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axiom2Report {
    /// `(ε, residual)` for each ε whose stratum passed validation.
    pub residuals: Vec<(f64, f64)>,
    pub max_residual: f64,
    /// Largest ε for which `M^{ge^{εX}} ⊆ M^g` held on the sample grid.
    pub largest_valid_eps: Option<f64>,
}

/// Compares `α_{ge^{εX}}(Y)` with `α_g(εX + Y)` on `stratum`, which must be
/// fixed by both `g` and every `ge^{εX}`. Raw normalization: the identity
/// ties group elements to unscaled Lie algebra elements.
pub fn bouquet_axiom2(
    geom: &EquivariantGeometry,
    g: &CMatrix,
    x: &CMatrix,
    y: &CMatrix,
    eps: &[f64],
    stratum: &FixedStratum,
) -> Result<Axiom2Report> {
    require_centralizer(geom, g, x)?;
    require_centralizer(geom, g, y)?;
    let base = stratum.for_element(geom, g)?;
    let mut report = Axiom2Report {
        residuals: vec![],
        max_residual: 0.0,
        largest_valid_eps: None,
    };
    for &e in eps {
        if !(0.0..=1e-2).contains(&e) {
            return Err(Error::Validation(format!("axiom-2 eps {e} outside [0, 1e-2]")));
        }
        let ge = g * geom.group.exp(&(x * c(e, 0.0)))?;
        let lhs = chern_character(geom, &ge, y, &base, Normalization::Raw)?;
        let rhs = chern_character(geom, g, &(x * c(e, 0.0) + y), &base, Normalization::Raw)?;
        let mut worst: f64 = 0.0;
        for q in base.sub_chart.grid_points(base.sub_chart.grid) {
            worst = worst.max(lhs.form_at(&q)?.try_sub(&rhs.form_at(&q)?)?.max_abs());
        }
        report.residuals.push((e, worst));
        report.max_residual = report.max_residual.max(worst);
        report.largest_valid_eps = Some(report.largest_valid_eps.map_or(e, |m: f64| m.max(e)));
    }
    Ok(report)
}

/// Tensor-product trapezoid rule for the top-degree coefficient of a scalar
/// field over the chart box, times the chart orientation. On a point chart
/// this is the degree-0 value.
pub fn integrate_top_form(
    chart: &Chart,
    field: &dyn Fn(&[f64]) -> Result<FormValue>,
    count: usize,
) -> Result<Complex64> {
    let n = chart.dim();
    if n == 0 {
        return Ok(field(&[])?.scalar_coeff(0));
    }
    if count < 2 {
        return Err(Error::Validation("quadrature needs at least two nodes per axis".into()));
    }
    let axes: Vec<Vec<f64>> = (0..n).map(|a| chart.axis_nodes(a, count)).collect();
    let weights: Vec<Vec<f64>> = axes
        .iter()
        .map(|nodes| {
            let h = (nodes[nodes.len() - 1] - nodes[0]) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == 0 || i == count - 1 { 0.5 * h } else { h })
                .collect()
        })
        .collect();
    let top = (1usize << n) - 1;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut index = vec![0usize; n];
    loop {
        let p: Vec<f64> = index.iter().enumerate().map(|(a, &i)| axes[a][i]).collect();
        let f = field(&p)?;
        if f.fiber_rank() != 1 {
            return Err(Error::Dimension("integrand must be a scalar form".into()));
        }
        let v = f.scalar_coeff(top);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand at {p:?}")));
        }
        let w: f64 = index.iter().enumerate().map(|(a, &i)| weights[a][i]).product();
        sum += v * w;
        // odometer, last axis fastest
        let mut a = n;
        loop {
            if a == 0 {
                return Ok(sum * chart.orientation);
            }
            a -= 1;
            index[a] += 1;
            if index[a] < count {
                break;
            }
            index[a] = 0;
        }
    }
}

/// Integral of the entry over its stratum.
pub fn integrate_entry(entry: &BouquetEntry, count: usize) -> Result<Complex64> {
    integrate_top_form(&entry.stratum.sub_chart, &|q| entry.form_at(q), count)
}
