use std::fmt;
use std::sync::Arc;

use super::chart::Chart;
use super::group::GroupModel;
use crate::error::{Error, Result};
use crate::forms::{self, FormValue, TangentVector};
use crate::grassmann::koszul_sign;
use crate::linalg::{self, c, CMatrix, RMatrix};

/// Step for first derivatives (fundamental fields, cocycle derivatives,
/// embedding Jacobians).
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-5;
/// Step for exterior derivatives of composite fields.
pub const DEFAULT_EXTERIOR_STEP: f64 = 1e-4;
pub const FIXED_POINT_TOL: f64 = 1e-8;

pub type ActFn = Arc<dyn Fn(&CMatrix, &[f64]) -> Vec<f64> + Send + Sync>;
pub type CocycleFn = Arc<dyn Fn(&CMatrix, &[f64]) -> CMatrix + Send + Sync>;
/// `(X, p) ↦ d/dt|₀ act(e^{tX}, p)`
pub type GeneratorFn = Arc<dyn Fn(&CMatrix, &[f64]) -> Vec<f64> + Send + Sync>;
/// `(g, p) ↦ D act(g, ·)(p)`
pub type JacobianFn = Arc<dyn Fn(&CMatrix, &[f64]) -> RMatrix + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&[f64]) -> FormValue + Send + Sync>;
pub type EmbeddingFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type EmbeddingJacobianFn = Arc<dyn Fn(&[f64]) -> RMatrix + Send + Sync>;

/// Action `μ` on the chart together with the fiber action `c(g, p)` of `μ^V`
/// in the chart trivialization.
#[derive(Clone)]
pub struct ActionModel {
    pub rank: usize,
    act: ActFn,
    cocycle: CocycleFn,
    generator: Option<GeneratorFn>,
    cocycle_derivative: Option<CocycleFn>,
    jacobian: Option<JacobianFn>,
}

impl fmt::Debug for ActionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionModel")
            .field("rank", &self.rank)
            .field("analytic_generator", &self.generator.is_some())
            .field("analytic_cocycle_derivative", &self.cocycle_derivative.is_some())
            .finish()
    }
}

impl ActionModel {
    pub fn new(rank: usize, act: ActFn, cocycle: CocycleFn) -> Self {
        Self {
            rank,
            act,
            cocycle,
            generator: None,
            cocycle_derivative: None,
            jacobian: None,
        }
    }

    pub fn with_generator(mut self, f: GeneratorFn) -> Self {
        self.generator = Some(f);
        self
    }

    /// `(X, p) ↦ d/dt|₀ c(e^{tX}, p)`
    pub fn with_cocycle_derivative(mut self, f: CocycleFn) -> Self {
        self.cocycle_derivative = Some(f);
        self
    }

    pub fn with_jacobian(mut self, f: JacobianFn) -> Self {
        self.jacobian = Some(f);
        self
    }

    pub fn act(&self, g: &CMatrix, p: &[f64]) -> Vec<f64> {
        (self.act)(g, p)
    }

    pub fn cocycle(&self, g: &CMatrix, p: &[f64]) -> CMatrix {
        (self.cocycle)(g, p)
    }
}

/// Local connection 1-form with an optional closed-form curvature.
#[derive(Clone)]
pub struct ConnectionModel {
    potential: FieldFn,
    curvature: Option<FieldFn>,
}

impl fmt::Debug for ConnectionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionModel")
            .field("analytic_curvature", &self.curvature.is_some())
            .finish()
    }
}

impl ConnectionModel {
    pub fn new(potential: FieldFn) -> Self {
        Self {
            potential,
            curvature: None,
        }
    }

    pub fn with_curvature(mut self, f: FieldFn) -> Self {
        self.curvature = Some(f);
        self
    }

    pub fn potential(&self, p: &[f64]) -> FormValue {
        (self.potential)(p)
    }

    pub fn has_analytic_curvature(&self) -> bool {
        self.curvature.is_some()
    }
}

/// `(M, G, V, μ^V, ∇)` restricted to one chart.
#[derive(Clone, Debug)]
pub struct EquivariantGeometry {
    pub chart: Chart,
    pub group: GroupModel,
    pub action: ActionModel,
    pub connection: ConnectionModel,
}

impl EquivariantGeometry {
    pub fn new(chart: Chart, group: GroupModel, action: ActionModel, connection: ConnectionModel) -> Result<Self> {
        chart.validate()?;
        let geom = Self {
            chart,
            group,
            action,
            connection,
        };
        let p = geom.chart.grid_points(2).swap_remove(0);
        let a = geom.connection.potential(&p);
        if a.base_dim() != geom.chart.dim() || a.fiber_rank() != geom.rank() {
            return Err(Error::Dimension(format!(
                "connection on (n={}, d={}) for chart dimension {} and rank {}",
                a.base_dim(),
                a.fiber_rank(),
                geom.chart.dim(),
                geom.rank()
            )));
        }
        let c0 = geom.action.cocycle(&geom.group.identity(), &p);
        if c0.nrows() != geom.rank() || c0.ncols() != geom.rank() {
            return Err(Error::Dimension("cocycle rank differs from the bundle rank".into()));
        }
        Ok(geom)
    }

    pub fn rank(&self) -> usize {
        self.action.rank
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn act(&self, g: &CMatrix, p: &[f64]) -> Vec<f64> {
        self.action.act(g, p)
    }

    pub fn cocycle(&self, g: &CMatrix, p: &[f64]) -> CMatrix {
        self.action.cocycle(g, p)
    }

    pub fn connection_form(&self, p: &[f64]) -> Result<FormValue> {
        self.chart.require_point(p)?;
        Ok(self.connection.potential(p))
    }

    /// Differential of `act(g, ·)` at `p`.
    pub fn act_jacobian(&self, g: &CMatrix, p: &[f64]) -> RMatrix {
        if let Some(f) = &self.action.jacobian {
            return f(g, p);
        }
        let n = p.len();
        let h = DEFAULT_DERIVATIVE_STEP;
        let mut jac = RMatrix::zeros(n, n);
        for j in 0..n {
            let mut plus = p.to_vec();
            let mut minus = p.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let (fp, fm) = (self.act(g, &plus), self.act(g, &minus));
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }
}

/// Exterior derivative by central differences of each coefficient.
pub fn exterior_derivative(
    chart: &Chart,
    field: &dyn Fn(&[f64]) -> Result<FormValue>,
    p: &[f64],
    h: f64,
) -> Result<FormValue> {
    chart.require_margin(p, h)?;
    let base = field(p)?;
    let n = chart.dim();
    let mut out = FormValue::zero(n, base.fiber_rank());
    for j in 0..n {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let deriv = field(&plus)?.try_sub(&field(&minus)?)?.scale(c(0.5 / h, 0.0));
        for mask in 0..1usize << n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let coeff = deriv.coeff(mask);
            if linalg::max_abs(coeff) == 0.0 {
                continue;
            }
            let sign = koszul_sign(1 << j, mask);
            *out.coeff_mut(mask | (1 << j)) += coeff * c(sign, 0.0);
        }
    }
    Ok(out)
}

/// `dA + A∧A` by finite differences.
pub fn finite_difference_curvature(geom: &EquivariantGeometry, p: &[f64], h: f64) -> Result<FormValue> {
    let field = |x: &[f64]| Ok(geom.connection.potential(x));
    let da = exterior_derivative(&geom.chart, &field, p, h)?;
    let a = geom.connection.potential(p);
    da.try_add(&forms::wedge(&a, &a)?)
}

/// Curvature 2-form, analytic when the connection supplies it.
pub fn curvature(geom: &EquivariantGeometry, p: &[f64]) -> Result<FormValue> {
    if let Some(f) = &geom.connection.curvature {
        geom.chart.require_point(p)?;
        return Ok(f(p));
    }
    finite_difference_curvature(geom, p, DEFAULT_EXTERIOR_STEP)
}

/// `X_M(p) = d/dt|₀ act(e^{tX}, p)`; the step is used only when no analytic
/// generator is available.
pub fn fundamental_vector_field(geom: &EquivariantGeometry, x: &CMatrix, p: &[f64], h: f64) -> Result<TangentVector> {
    geom.chart.require_point(p)?;
    if let Some(f) = &geom.action.generator {
        return TangentVector::new(f(x, p));
    }
    let plus = geom.act(&geom.group.exp(&(x * c(h, 0.0)))?, p);
    let minus = geom.act(&geom.group.exp(&(x * c(-h, 0.0)))?, p);
    TangentVector::new(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// `d/dt|₀ c(e^{tX}, p)`
pub fn cocycle_derivative(geom: &EquivariantGeometry, x: &CMatrix, p: &[f64]) -> Result<CMatrix> {
    if let Some(f) = &geom.action.cocycle_derivative {
        return Ok(f(x, p));
    }
    let h = DEFAULT_DERIVATIVE_STEP;
    let plus = geom.cocycle(&geom.group.exp(&(x * c(h, 0.0)))?, p);
    let minus = geom.cocycle(&geom.group.exp(&(x * c(-h, 0.0)))?, p);
    Ok((plus - minus) * c(0.5 / h, 0.0))
}

/// Moment endomorphism `μ(X)(p) = d/dt|₀ c(e^{tX}, p) + ι_{X_M(p)} A(p)`.
///
/// With `X_M` the generator of the action on points, `F + μ(X)` is closed
/// under `d + ι_{X_M}`, which is the Cartan differential `d − ι_{X♯}` for the
/// generator `X♯ = −X_M` of the induced action on functions.
pub fn moment(geom: &EquivariantGeometry, x: &CMatrix, p: &[f64]) -> Result<CMatrix> {
    geom.chart.require_point(p)?;
    let lie = cocycle_derivative(geom, x, p)?;
    let xm = fundamental_vector_field(geom, x, p, DEFAULT_DERIVATIVE_STEP)?;
    let iota = forms::contract(&xm, &geom.connection.potential(p))?;
    Ok(lie + iota.coeff(0))
}

/// Equivariant curvature `F(X) = F + μ(X)`.
pub fn equivariant_curvature(geom: &EquivariantGeometry, x: &CMatrix, p: &[f64]) -> Result<FormValue> {
    let mut f = curvature(geom, p)?;
    *f.coeff_mut(0) += moment(geom, x, p)?;
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Residual of `c⁻¹ (act_g^* A) c + c⁻¹ d c(g, ·) = A` over the samples.
pub fn check_invariance(geom: &EquivariantGeometry, g: &CMatrix, samples: &[Vec<f64>]) -> Result<InvarianceReport> {
    let mut report = InvarianceReport {
        max_residual: 0.0,
        worst_point: vec![],
        samples: samples.len(),
    };
    let h = DEFAULT_DERIVATIVE_STEP;
    let n = geom.dim();
    for p in samples {
        let cg = geom.cocycle(g, p);
        let cinv = linalg::inverse(&cg)?;
        let moved = geom.act(g, p);
        let pulled = geom.connection.potential(&moved).pullback(&geom.act_jacobian(g, p))?;
        let mut lhs = pulled.map_fiber(|m| &cinv * m * &cg);
        for j in 0..n {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus[j] += h;
            minus[j] -= h;
            let dc = (geom.cocycle(g, &plus) - geom.cocycle(g, &minus)) * c(0.5 / h, 0.0);
            *lhs.coeff_mut(1 << j) += &cinv * dc;
        }
        let r = lhs.try_sub(&geom.connection.potential(p))?.max_abs();
        if !(r <= report.max_residual) {
            report.max_residual = r;
            report.worst_point = p.clone();
        }
    }
    Ok(report)
}

/// A fixed-point set `M^g` parametrized by a sub-chart.
#[derive(Clone)]
pub struct FixedStratum {
    pub label: String,
    pub g: CMatrix,
    pub sub_chart: Chart,
    embedding: EmbeddingFn,
    jacobian: Option<EmbeddingJacobianFn>,
}

impl fmt::Debug for FixedStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedStratum")
            .field("label", &self.label)
            .field("dim", &self.sub_chart.dim())
            .finish()
    }
}

impl FixedStratum {
    pub fn embed(&self, q: &[f64]) -> Vec<f64> {
        (self.embedding)(q)
    }

    pub fn dim(&self) -> usize {
        self.sub_chart.dim()
    }

    /// `n×k` differential of the embedding.
    pub fn embedding_jacobian(&self, q: &[f64]) -> RMatrix {
        if let Some(f) = &self.jacobian {
            return f(q);
        }
        let k = q.len();
        let n = self.embed(q).len();
        let h = DEFAULT_DERIVATIVE_STEP;
        let mut jac = RMatrix::zeros(n, k);
        for a in 0..k {
            let mut plus = q.to_vec();
            let mut minus = q.to_vec();
            plus[a] += h;
            minus[a] -= h;
            let (fp, fm) = (self.embed(&plus), self.embed(&minus));
            for i in 0..n {
                jac[(i, a)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    /// The same submanifold checked as (part of) the fixed set of `g`.
    pub fn for_element(&self, geom: &EquivariantGeometry, g: &CMatrix) -> Result<FixedStratum> {
        check_fixed(geom, g, &self.label, &self.sub_chart, self.embedding.as_ref())?;
        Ok(FixedStratum {
            g: g.clone(),
            ..self.clone()
        })
    }

    pub fn with_jacobian(mut self, f: EmbeddingJacobianFn) -> Self {
        self.jacobian = Some(f);
        self
    }

    /// Sample points of the sub-chart with their ambient images.
    pub fn samples(&self, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.sub_chart
            .grid_points(count)
            .into_iter()
            .map(|q| {
                let p = self.embed(&q);
                (q, p)
            })
            .collect()
    }
}

/// Validates that `embedding` lands in the chart and is fixed by `g` on the
/// sub-chart grid.
pub fn declare_fixed_stratum(
    geom: &EquivariantGeometry,
    g: &CMatrix,
    label: impl Into<String>,
    sub_chart: Chart,
    embedding: EmbeddingFn,
) -> Result<FixedStratum> {
    sub_chart.validate()?;
    let label = label.into();
    check_fixed(geom, g, &label, &sub_chart, embedding.as_ref())?;
    Ok(FixedStratum {
        label,
        g: g.clone(),
        sub_chart,
        embedding,
        jacobian: None,
    })
}

fn check_fixed(
    geom: &EquivariantGeometry,
    g: &CMatrix,
    label: &str,
    sub_chart: &Chart,
    embedding: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync),
) -> Result<()> {
    let mut worst: Option<(f64, Vec<f64>)> = None;
    for q in sub_chart.grid_points(sub_chart.grid) {
        let p = embedding(&q);
        geom.chart.require_point(&p)?;
        let moved = geom.act(g, &p);
        let r = moved.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst.as_ref().is_none_or(|(w, _)| r > *w) {
            worst = Some((r, p));
        }
    }
    if let Some((r, p)) = worst {
        if !(r < FIXED_POINT_TOL) {
            return Err(Error::Validation(format!(
                "stratum '{label}' is not fixed: residual {r:.3e} at {p:?}"
            )));
        }
    }
    Ok(())
}

/// The single point `p` as a stratum of `g`.
pub fn point_stratum(
    geom: &EquivariantGeometry,
    g: &CMatrix,
    label: impl Into<String>,
    p: Vec<f64>,
) -> Result<FixedStratum> {
    let label = label.into();
    let n = p.len();
    let stratum = declare_fixed_stratum(
        geom,
        g,
        label.clone(),
        Chart::point(label),
        Arc::new(move |_| p.clone()),
    )?;
    Ok(stratum.with_jacobian(Arc::new(move |_| RMatrix::zeros(n, 0))))
}

/// The whole chart as a stratum of `g`; requires `g` to act trivially on it.
pub fn chart_stratum(geom: &EquivariantGeometry, g: &CMatrix, label: impl Into<String>) -> Result<FixedStratum> {
    let n = geom.dim();
    let stratum = declare_fixed_stratum(geom, g, label, geom.chart.clone(), Arc::new(|q| q.to_vec()))?;
    Ok(stratum.with_jacobian(Arc::new(move |_| RMatrix::identity(n, n))))
}

/// Grid points `p` with `|act(g, p) − p| < tol`.
pub fn find_fixed_points(geom: &EquivariantGeometry, g: &CMatrix, count: usize, tol: f64) -> Vec<Vec<f64>> {
    geom.chart
        .grid_points(count)
        .into_iter()
        .filter(|p| geom.act(g, p).iter().zip(p).all(|(a, b)| (a - b).abs() < tol))
        .collect()
}

/// Sum of a fiber matrix and a form: `m·1 + f`.
pub fn add_degree_zero(f: &FormValue, m: &CMatrix) -> FormValue {
    let mut out = f.clone();
    *out.coeff_mut(0) += m;
    out
}
