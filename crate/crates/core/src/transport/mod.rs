//! Equivariant super parallel transport in components, equivariant super
//! holonomy, and the closed-form holonomy it is checked against.
//!
//! A parallel section has components `(s₀, s₁)` with `s₁ = 0` and
//!
//! ```text
//! ṡ₀ = (−A(ẏ) + Σ_{j<k} F_jk(y) ψ^j ψ^k) s₀
//! ```
//!
//! along the lifted curve `y(t) = act(e^{−ta}, x(t))`, whose odd tangent data
//! `ψ` is pushed forward by the differential of `act(e^{−ta}, ·)`. The loop
//! closes with the fiber action of `h·e^{ca}` for circumference `c`.

mod path;

pub use path::{OddData, OddFn, PathShape, SuperPath};

use crate::error::{Error, Result};
use crate::forms::{self, FormValue, DEFAULT_EXP_TOL};
use crate::geometry::{self, EquivariantGeometry, FixedStratum, FIXED_POINT_TOL};
use crate::grassmann::{
    gauge_transform, reducing_gauge, GrassmannElement, GrassmannMatrix, Parity, SuperConnectionForm,
};
use crate::linalg::{self, c, CMatrix};
use crate::ode::rk4;

pub const DEFAULT_STEPS: usize = 512;
/// Largest change under step halving before a solve is flagged.
pub const STEP_CHANGE_TOL: f64 = 1e-6;
pub const AD_TOL: f64 = 1e-8;
pub const CLOSURE_TOL: f64 = 1e-6;

/// Path, constant `G`-connection datum `a` (from `A = θdθ⊗a`), loop-closing
/// element `h` and circumference.
#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub geometry: EquivariantGeometry,
    pub path: SuperPath,
    pub a: CMatrix,
    pub h: CMatrix,
    pub circumference: f64,
}

impl TransportProblem {
    /// Non-equivariant problem: `a = 0`, `h = e`, circumference 1.
    pub fn new(geometry: EquivariantGeometry, path: SuperPath) -> Result<Self> {
        if path.dim() != geometry.dim() {
            return Err(Error::Dimension(format!(
                "path in {} coordinates on a {}-dimensional chart",
                path.dim(),
                geometry.dim()
            )));
        }
        let m = geometry.group.matrix_size();
        Ok(Self {
            a: CMatrix::zeros(m, m),
            h: geometry.group.identity(),
            geometry,
            path,
            circumference: 1.0,
        })
    }

    pub fn with_datum(mut self, a: CMatrix, h: CMatrix) -> Result<Self> {
        let m = self.geometry.group.matrix_size();
        if a.shape() != (m, m) || h.shape() != (m, m) {
            return Err(Error::Dimension(format!("group data must be {m}x{m}")));
        }
        let (_, residual) = self.geometry.group.coordinates(&a)?;
        if residual > AD_TOL {
            return Err(Error::Validation(format!(
                "a is not in the Lie algebra (residual {residual:.3e})"
            )));
        }
        self.a = a;
        self.h = h;
        Ok(self)
    }

    pub fn with_circumference(mut self, circumference: f64) -> Result<Self> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(Error::Validation(format!(
                "circumference must be positive, got {circumference}"
            )));
        }
        self.circumference = circumference;
        Ok(self)
    }

    /// Problem for a constant super connection `dθ⊗α + θdθ⊗a`, reduced to the
    /// form `θdθ⊗a'` by the gauge map `e^{−θα}`.
    pub fn from_super_connection(
        geometry: EquivariantGeometry,
        path: SuperPath,
        connection: &SuperConnectionForm,
        h: CMatrix,
    ) -> Result<Self> {
        let a = reduced_constant_datum(connection)?;
        Self::new(geometry, path)?.with_datum(a, h)
    }

    fn is_equivariant(&self) -> bool {
        linalg::max_abs(&self.a) != 0.0
    }

    /// `h·e^{ca}`
    pub fn closing_element(&self) -> Result<CMatrix> {
        Ok(&self.h * self.geometry.group.exp(&(&self.a * c(self.circumference, 0.0)))?)
    }

    /// Lifted point, its velocity and the pushed-forward odd data at time `t`.
    pub fn lifted(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<GrassmannElement>)> {
        let (x, xdot) = self.path.position(t, self.circumference);
        let psi = self.path.psi(t);
        self.path.check_odd(&psi)?;
        let geom = &self.geometry;
        if !self.is_equivariant() {
            self.require_inside(&x, t)?;
            return Ok((x, xdot, psi));
        }
        let g = geom.group.exp(&(&self.a * c(-t, 0.0)))?;
        let y = geom.act(&g, &x);
        self.require_inside(&y, t)?;
        let jac = geom.act_jacobian(&g, &x);
        let a_m = geometry::fundamental_vector_field(geom, &self.a, &y, geometry::DEFAULT_DERIVATIVE_STEP)?;
        let n = x.len();
        let ydot = (0..n)
            .map(|i| (0..n).map(|j| jac[(i, j)] * xdot[j]).sum::<f64>() - a_m.0[i])
            .collect();
        let q = self.path.num_generators();
        let psi_eff = (0..n)
            .map(|i| {
                let mut e = GrassmannElement::zero(q);
                for (j, p) in psi.iter().enumerate() {
                    if jac[(i, j)] != 0.0 {
                        e.axpy(c(jac[(i, j)], 0.0), p);
                    }
                }
                e
            })
            .collect();
        Ok((y, ydot, psi_eff))
    }

    fn require_inside(&self, y: &[f64], t: f64) -> Result<()> {
        if self.geometry.chart.contains(y) {
            Ok(())
        } else {
            Err(Error::ChartExit {
                time: t,
                detail: format!("lifted curve at {y:?} left chart '{}'", self.geometry.chart.label),
            })
        }
    }

    /// Right-hand side matrix `M(t)` of `ṡ₀ = M(t) s₀`.
    pub fn generator(&self, t: f64) -> Result<GrassmannMatrix> {
        let (y, ydot, psi) = self.lifted(t)?;
        let geom = &self.geometry;
        let q = self.path.num_generators();
        let a = geom.connection.potential(&y);
        let a_v = forms::contract(&forms::TangentVector(ydot), &a)?;
        let mut m = GrassmannMatrix::from_complex(&(-a_v.coeff(0)), q);
        if q > 0 {
            let f = geometry::curvature(geom, &y).map_err(|e| match e {
                Error::Domain(detail) => Error::ChartExit { time: t, detail },
                other => other,
            })?;
            let n = y.len();
            for j in 0..n {
                for k in j + 1..n {
                    let fjk = f.coeff((1 << j) | (1 << k));
                    if linalg::max_abs(fjk) == 0.0 {
                        continue;
                    }
                    let pp = &psi[j] * &psi[k];
                    m.axpy(c(1.0, 0.0), &GrassmannMatrix::from_tensor(fjk, &pp));
                }
            }
        }
        Ok(m)
    }
}

/// Fundamental solution of the component equation on `[t0, t1]`.
pub fn integrate_interval(problem: &TransportProblem, t0: f64, t1: f64, steps: usize) -> Result<GrassmannMatrix> {
    if steps == 0 {
        return Err(Error::Validation("steps must be at least 1".into()));
    }
    let d = problem.geometry.rank();
    let q = problem.path.num_generators();
    rk4(
        |t, u: &GrassmannMatrix| problem.generator(t)?.try_mul(u),
        GrassmannMatrix::identity(d, q),
        t0,
        t1,
        steps,
    )
}

#[derive(Clone, Debug)]
pub struct TransportSolution {
    /// Transport `V_{x(0)} → V_{y(c)}` with Grassmann coefficients.
    pub fundamental: GrassmannMatrix,
    pub steps: usize,
    /// Max entry change when the step is halved.
    pub step_change: f64,
    pub under_resolved: bool,
}

/// Parallel transport over the whole loop, with a step-halving check.
pub fn integrate_parallel(problem: &TransportProblem, steps: usize) -> Result<TransportSolution> {
    let circ = problem.circumference;
    let fundamental = integrate_interval(problem, 0.0, circ, steps)?;
    let fine = integrate_interval(problem, 0.0, circ, 2 * steps)?;
    let step_change = (&fundamental - &fine).max_abs();
    Ok(TransportSolution {
        fundamental,
        steps,
        step_change,
        under_resolved: !(step_change <= STEP_CHANGE_TOL),
    })
}

/// `log₂(|U_N − U_2N| / |U_2N − U_4N|)`
pub fn observed_order(problem: &TransportProblem, steps: usize) -> Result<f64> {
    let circ = problem.circumference;
    let u1 = integrate_interval(problem, 0.0, circ, steps)?;
    let u2 = integrate_interval(problem, 0.0, circ, 2 * steps)?;
    let u4 = integrate_interval(problem, 0.0, circ, 4 * steps)?;
    Ok(((&u1 - &u2).max_abs() / (&u2 - &u4).max_abs()).log2())
}

/// Identifies generator `θ_j` with `dx^{j+1}`.
pub fn grassmann_to_form(m: &GrassmannMatrix, n: usize) -> Result<FormValue> {
    if m.num_generators() != n || m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix over {} generators is not a form on {n} coordinates",
            m.nrows(),
            m.ncols(),
            m.num_generators()
        )));
    }
    FormValue::from_coeffs(
        n,
        m.nrows(),
        (0..1usize << n).map(|mask| m.coefficient_matrix(mask)).collect(),
    )
}

pub fn form_to_grassmann(f: &FormValue) -> GrassmannMatrix {
    let (n, d) = (f.base_dim(), f.fiber_rank());
    let mut m = GrassmannMatrix::zeros(d, d, n);
    for mask in 0..1usize << n {
        let coeff = f.coeff(mask);
        if linalg::max_abs(coeff) != 0.0 {
            m.axpy(
                c(1.0, 0.0),
                &GrassmannMatrix::from_tensor(coeff, &GrassmannElement::monomial(n, mask, c(1.0, 0.0))),
            );
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopReport {
    pub ad_residual: f64,
    /// `|act(h, x) − x|` for constant paths.
    pub fixed_point_residual: Option<f64>,
    /// `|x(0) − act(h·e^{ca}, y(c))|` for non-constant paths.
    pub closure_residual: Option<f64>,
    pub passed: bool,
}

impl LoopReport {
    pub fn describe(&self) -> String {
        let mut parts = vec![format!("Ad residual {:.3e}", self.ad_residual)];
        if let Some(r) = self.fixed_point_residual {
            parts.push(format!("fixed-point residual {r:.3e}"));
        }
        if let Some(r) = self.closure_residual {
            parts.push(format!("closure residual {r:.3e}"));
        }
        parts.join(", ")
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn loop_validate(problem: &TransportProblem) -> Result<LoopReport> {
    let geom = &problem.geometry;
    let ad = geom.group.adjoint(&problem.h, &problem.a)?;
    let ad_residual = linalg::max_abs(&(ad - &problem.a));
    let mut report = LoopReport {
        ad_residual,
        fixed_point_residual: None,
        closure_residual: None,
        passed: ad_residual < AD_TOL,
    };
    if problem.path.shape.is_constant() {
        let (x, _) = problem.path.position(0.0, problem.circumference);
        let r = distance(&geom.act(&problem.h, &x), &x);
        report.passed &= r < FIXED_POINT_TOL;
        report.fixed_point_residual = Some(r);
    } else {
        let circ = problem.circumference;
        let (x0, _) = problem.path.position(0.0, circ);
        let (xc, _) = problem.path.position(circ, circ);
        let y = geom.act(&geom.group.exp(&(&problem.a * c(-circ, 0.0)))?, &xc);
        let r = distance(&geom.act(&problem.closing_element()?, &y), &x0);
        report.passed &= r < CLOSURE_TOL;
        report.closure_residual = Some(r);
    }
    Ok(report)
}

fn require_loop_data(geom: &EquivariantGeometry, x: &[f64], a: &CMatrix, h: &CMatrix) -> Result<()> {
    geom.chart.require_point(x)?;
    let r = distance(&geom.act(h, x), x);
    if !(r < FIXED_POINT_TOL) {
        return Err(Error::LoopValidation(format!(
            "{x:?} is not fixed by h (residual {r:.3e})"
        )));
    }
    let ad = linalg::max_abs(&(geom.group.adjoint(h, a)? - a));
    if !(ad < AD_TOL) {
        return Err(Error::LoopValidation(format!("Ad_h a ≠ a (residual {ad:.3e})")));
    }
    Ok(())
}

/// `c(h, x) · exp(F(x) + μ(a)(x))` in ambient coordinates.
pub fn super_holonomy_constant(geom: &EquivariantGeometry, x: &[f64], a: &CMatrix, h: &CMatrix) -> Result<FormValue> {
    require_loop_data(geom, x, a, h)?;
    let fx = geometry::equivariant_curvature(geom, a, x)?;
    Ok(forms::exp_even(&fx, DEFAULT_EXP_TOL)?.left_matrix(&geom.cocycle(h, x)))
}

/// The same holonomy pulled back to the stratum at sub-chart point `q`.
pub fn super_holonomy_on_stratum(
    geom: &EquivariantGeometry,
    stratum: &FixedStratum,
    q: &[f64],
    a: &CMatrix,
) -> Result<FormValue> {
    let x = stratum.embed(q);
    super_holonomy_constant(geom, &x, a, &stratum.g)?.pullback(&stratum.embedding_jacobian(q))
}

#[derive(Clone, Debug)]
pub struct HolonomyResult {
    pub holonomy: GrassmannMatrix,
    pub solution: TransportSolution,
    pub report: LoopReport,
}

/// Transport along the lifted loop followed by the fiber action of `h·e^{ca}`.
pub fn equivariant_holonomy_ode(problem: &TransportProblem, steps: usize) -> Result<HolonomyResult> {
    let report = loop_validate(problem)?;
    if !report.passed {
        return Err(Error::LoopValidation(report.describe()));
    }
    let solution = integrate_parallel(problem, steps)?;
    let (y, _, _) = problem.lifted(problem.circumference)?;
    let closing = problem.closing_element()?;
    let cg = GrassmannMatrix::from_complex(&problem.geometry.cocycle(&closing, &y), problem.path.num_generators());
    Ok(HolonomyResult {
        holonomy: cg.try_mul(&solution.fundamental)?,
        solution,
        report,
    })
}

#[derive(Clone, Debug)]
pub struct InfinitesimalReport {
    /// `(ε, (Hol(ε) − id)/ε)` per loop size.
    pub quotients: Vec<(f64, FormValue)>,
    pub limit: FormValue,
    pub expected: FormValue,
    pub deviation: f64,
}

/// Richardson extrapolation to `ε → 0` assuming an error series in `ε, ε², …`.
pub fn richardson(values: &[(f64, FormValue)]) -> Result<FormValue> {
    if values.is_empty() {
        return Err(Error::Validation("no samples to extrapolate".into()));
    }
    let mut table: Vec<FormValue> = values.iter().map(|(_, v)| v.clone()).collect();
    for level in 1..values.len() {
        for i in (level..values.len()).rev() {
            let (far, near) = (values[i - level].0, values[i].0);
            table[i] = table[i]
                .scale(c(far, 0.0))
                .try_sub(&table[i - 1].scale(c(near, 0.0)))?
                .scale(c(1.0 / (far - near), 0.0));
        }
    }
    Ok(table.pop().expect("nonempty"))
}

/// `(Hol(ε) − id)/ε` for shrinking constant loops at `x`, extrapolated and
/// compared with `F(a)(x)`.
pub fn infinitesimal_holonomy(
    geom: &EquivariantGeometry,
    x: &[f64],
    a: &CMatrix,
    h: &CMatrix,
    eps: &[f64],
    steps: usize,
) -> Result<InfinitesimalReport> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Validation("eps list must be positive and decreasing".into()));
    }
    let n = geom.dim();
    let d = geom.rank();
    let mut quotients = vec![];
    for &e in eps {
        let problem = TransportProblem::new(geom.clone(), SuperPath::constant_generic(x.to_vec()))?
            .with_datum(a.clone(), h.clone())?
            .with_circumference(e)?;
        let hol = grassmann_to_form(&equivariant_holonomy_ode(&problem, steps)?.holonomy, n)?;
        let q = hol.try_sub(&FormValue::identity(n, d))?.scale(c(1.0 / e, 0.0));
        quotients.push((e, q));
    }
    let limit = richardson(&quotients)?;
    let expected = geometry::equivariant_curvature(geom, a, x)?;
    let deviation = limit.try_sub(&expected)?.max_abs();
    Ok(InfinitesimalReport {
        quotients,
        limit,
        expected,
        deviation,
    })
}

/// Reduces `dθ⊗α + θdθ⊗a` by `e^{−θα}` and returns the remaining datum,
/// which must be free of nilpotent parts.
pub fn reduced_constant_datum(connection: &SuperConnectionForm) -> Result<CMatrix> {
    let reduced = gauge_transform(connection, &reducing_gauge(connection)?)?;
    if reduced.alpha.max_abs() != 0.0 {
        return Err(Error::Numeric("gauge reduction left a dθ component".into()));
    }
    let q = reduced.a.num_generators();
    for mask in 1..1usize << q {
        if linalg::max_abs(&reduced.a.coefficient_matrix(mask)) != 0.0 {
            return Err(Error::Validation(
                "reduced datum has nilpotent Grassmann parts; only body-valued data can drive the lifted curve".into(),
            ));
        }
    }
    Ok(reduced.a.body())
}

/// A section over `R^{0|1}` written `v + θw`, with `v` even and `w` odd.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSection {
    pub v: GrassmannMatrix,
    pub w: GrassmannMatrix,
}

/// Components `s₀ = i₀*s`, `s₁ = i₀*(∇_D s)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionState {
    pub t: f64,
    pub s0: GrassmannMatrix,
    pub s1: GrassmannMatrix,
}

/// `A(ψ) = Σ_j A_j(x) ψ^j`, the odd connection term seen by `D`.
pub fn odd_connection_term(geom: &EquivariantGeometry, x: &[f64], psi: &[GrassmannElement]) -> Result<GrassmannMatrix> {
    let a = geom.connection_form(x)?;
    if psi.len() != x.len() {
        return Err(Error::Dimension(
            "odd data length differs from the chart dimension".into(),
        ));
    }
    let q = psi.first().map_or(0, GrassmannElement::num_generators);
    let mut out = GrassmannMatrix::zeros(geom.rank(), geom.rank(), q);
    for (j, p) in psi.iter().enumerate() {
        out.axpy(c(1.0, 0.0), &GrassmannMatrix::from_tensor(a.coeff(1 << j), p));
    }
    Ok(out)
}

fn require_column(m: &GrassmannMatrix, p: Parity, what: &str) -> Result<()> {
    if m.ncols() != 1 {
        return Err(Error::Dimension(format!("{what} must be a column vector")));
    }
    m.require_parity(p, what)
}

pub fn components(section: &ThetaSection, odd_connection: &GrassmannMatrix, t: f64) -> Result<SectionState> {
    require_column(&section.v, Parity::Even, "θ⁰ part")?;
    require_column(&section.w, Parity::Odd, "θ¹ part")?;
    let s1 = &section.w + &odd_connection.try_mul(&section.v)?;
    Ok(SectionState {
        t,
        s0: section.v.clone(),
        s1,
    })
}

pub fn reconstruct(state: &SectionState, odd_connection: &GrassmannMatrix) -> Result<ThetaSection> {
    require_column(&state.s0, Parity::Even, "s₀")?;
    require_column(&state.s1, Parity::Odd, "s₁")?;
    let w = &state.s1 - &odd_connection.try_mul(&state.s0)?;
    Ok(ThetaSection { v: state.s0.clone(), w })
}

#[cfg(test)]
mod tests;
