use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, RMatrix, I};

pub type ExpFn = Arc<dyn Fn(&CMatrix) -> Result<CMatrix> + Send + Sync>;

/// Linear read-out of maximal-torus coordinates. Applied to a group matrix it
/// yields unit complex numbers `z_k`; applied to a Lie-algebra matrix it
/// yields their velocities `ż_k`.
pub type TorusFn = Arc<dyn Fn(&CMatrix) -> Result<Vec<Complex64>> + Send + Sync>;

pub const CENTRALIZER_TOL: f64 = 1e-8;

/// A matrix Lie group with a fixed real basis of its Lie algebra.
#[derive(Clone)]
pub struct GroupModel {
    name: String,
    basis: Vec<CMatrix>,
    exp: Option<ExpFn>,
    torus: Option<TorusFn>,
}

impl fmt::Debug for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupModel")
            .field("name", &self.name)
            .field("matrix_size", &self.matrix_size())
            .field("dim", &self.basis.len())
            .finish()
    }
}

impl GroupModel {
    pub fn new(name: impl Into<String>, basis: Vec<CMatrix>) -> Result<Self> {
        let m = basis.first().map(|b| b.nrows()).unwrap_or(0);
        if m == 0 || basis.iter().any(|b| b.nrows() != m || b.ncols() != m) {
            return Err(Error::Dimension(
                "Lie algebra basis must be nonempty square matrices of one size".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            basis,
            exp: None,
            torus: None,
        })
    }

    pub fn with_exp(mut self, exp: ExpFn) -> Self {
        self.exp = Some(exp);
        self
    }

    pub fn with_torus(mut self, torus: TorusFn) -> Self {
        self.torus = Some(torus);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix_size(&self) -> usize {
        self.basis[0].nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn identity(&self) -> CMatrix {
        linalg::identity(self.matrix_size())
    }

    /// `Σ coeffs[i] · basis[i]`
    pub fn lie_element(&self, coeffs: &[f64]) -> Result<CMatrix> {
        if coeffs.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} coefficients for the {}-dimensional algebra of {}",
                coeffs.len(),
                self.dim(),
                self.name
            )));
        }
        let m = self.matrix_size();
        Ok(self
            .basis
            .iter()
            .zip(coeffs)
            .fold(CMatrix::zeros(m, m), |acc, (b, x)| acc + b * c(*x, 0.0)))
    }

    /// Least-squares real coordinates of `x` in the basis, with the residual.
    pub fn coordinates(&self, x: &CMatrix) -> Result<(Vec<f64>, f64)> {
        let m = self.matrix_size();
        if x.nrows() != m || x.ncols() != m {
            return Err(Error::Dimension("matrix size does not match the group".into()));
        }
        let k = self.dim();
        let rows = 2 * m * m;
        let a = RMatrix::from_fn(rows, k, |r, col| {
            let z = self.basis[col][(r / 2 / m, (r / 2) % m)];
            if r % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        let b = nalgebra::DVector::from_fn(rows, |r, _| {
            let z = x[(r / 2 / m, (r / 2) % m)];
            if r % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        let normal = a.transpose() * &a;
        let coeffs = normal
            .lu()
            .solve(&(a.transpose() * &b))
            .ok_or_else(|| Error::Numeric("degenerate Lie algebra basis".into()))?;
        let coeffs: Vec<f64> = coeffs.iter().copied().collect();
        let residual = linalg::max_abs(&(self.lie_element(&coeffs)? - x));
        Ok((coeffs, residual))
    }

    pub fn exp(&self, x: &CMatrix) -> Result<CMatrix> {
        if let Some(f) = &self.exp {
            return f(x);
        }
        linalg::expm(x)
    }

    pub fn exp_coords(&self, coeffs: &[f64]) -> Result<CMatrix> {
        self.exp(&self.lie_element(coeffs)?)
    }

    /// `Ad_g X = g X g⁻¹`
    pub fn adjoint(&self, g: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
        Ok(g * x * linalg::inverse(g)?)
    }

    /// Basis elements fixed by `Ad_g`, spanning the centralizer for the
    /// groups in the registry.
    pub fn centralizer_basis(&self, g: &CMatrix) -> Result<Vec<CMatrix>> {
        let mut out = vec![];
        for b in &self.basis {
            if linalg::max_abs(&(self.adjoint(g, b)? - b)) < CENTRALIZER_TOL {
                out.push(b.clone());
            }
        }
        Ok(out)
    }

    pub fn torus_coords(&self, m: &CMatrix) -> Result<Vec<Complex64>> {
        match &self.torus {
            Some(f) => f(m),
            None => Err(Error::Registry(format!("{} has no torus coordinates", self.name))),
        }
    }

    pub fn has_torus(&self) -> bool {
        self.torus.is_some()
    }
}

fn exp_diagonal_or_general(x: &CMatrix) -> Result<CMatrix> {
    let off_diagonal = (0..x.nrows()).any(|i| (0..x.ncols()).any(|j| i != j && x[(i, j)] != Complex64::from(0.0)));
    if off_diagonal {
        linalg::expm(x)
    } else {
        if !linalg::is_finite(x) {
            return Err(Error::Numeric("non-finite exponent".into()));
        }
        Ok(linalg::diag(&x.diagonal().iter().map(|z| z.exp()).collect::<Vec<_>>()))
    }
}

fn require_diagonal(m: &CMatrix, what: &str) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)].norm() > 1e-12 {
                return Err(Error::Domain(format!("{what} is not diagonal")));
            }
        }
    }
    Ok(())
}

fn require_size(m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!("expected a {n}x{n} matrix")));
    }
    Ok(())
}

pub fn u1() -> GroupModel {
    GroupModel::new("U(1)", vec![CMatrix::from_element(1, 1, I)])
        .expect("basis")
        .with_exp(Arc::new(exp_diagonal_or_general))
        .with_torus(Arc::new(|m| {
            require_size(m, 1)?;
            Ok(vec![m[(0, 0)]])
        }))
}

pub fn so2() -> GroupModel {
    let j = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(-1., 0.), c(1., 0.), c(0., 0.)]);
    GroupModel::new("SO(2)", vec![j])
        .expect("basis")
        .with_exp(Arc::new(|x| {
            require_size(x, 2)?;
            let t = x[(1, 0)].re;
            let (s, co) = t.sin_cos();
            if (x[(0, 1)] + x[(1, 0)]).norm() > 1e-12 || x[(0, 0)].norm() > 1e-12 || x[(1, 1)].norm() > 1e-12 {
                return linalg::expm(x);
            }
            Ok(CMatrix::from_row_slice(
                2,
                2,
                &[c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)],
            ))
        }))
        .with_torus(Arc::new(|m| {
            require_size(m, 2)?;
            Ok(vec![m[(0, 0)] + I * m[(1, 0)]])
        }))
}

pub fn t2() -> GroupModel {
    let basis = vec![linalg::diag(&[I, c(0., 0.)]), linalg::diag(&[c(0., 0.), I])];
    GroupModel::new("T2", basis)
        .expect("basis")
        .with_exp(Arc::new(exp_diagonal_or_general))
        .with_torus(Arc::new(|m| {
            require_size(m, 2)?;
            require_diagonal(m, "T2 element")?;
            Ok(vec![m[(0, 0)], m[(1, 1)]])
        }))
}

/// SU(2) with basis `iσ₃, iσ₁, iσ₂`; the torus read-out is defined on the
/// diagonal maximal torus only.
pub fn su2_diagonal() -> GroupModel {
    let s3 = linalg::diag(&[I, -I]);
    let s1 = CMatrix::from_row_slice(2, 2, &[c(0., 0.), I, I, c(0., 0.)]);
    let s2 = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(-1., 0.), c(0., 0.)]);
    GroupModel::new("SU(2)-diagonal", vec![s3, s1, s2])
        .expect("basis")
        .with_exp(Arc::new(exp_diagonal_or_general))
        .with_torus(Arc::new(|m| {
            require_size(m, 2)?;
            require_diagonal(m, "SU(2) element")?;
            Ok(vec![m[(0, 0)]])
        }))
}

pub fn group_by_name(name: &str) -> Result<GroupModel> {
    match name {
        "U(1)" | "U1" => Ok(u1()),
        "SO(2)" | "SO2" => Ok(so2()),
        "T2" | "T²" | "T^2" => Ok(t2()),
        "SU(2)-diagonal" | "SU(2)" | "SU2" => Ok(su2_diagonal()),
        other => Err(Error::Registry(format!("group '{other}'"))),
    }
}

pub const GROUP_NAMES: [&str; 4] = ["U(1)", "SO(2)", "T2", "SU(2)-diagonal"];

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn all() -> Vec<GroupModel> {
        GROUP_NAMES.iter().map(|n| group_by_name(n).unwrap()).collect()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        for g in all() {
            let e = g.exp_coords(&vec![0.0; g.dim()]).unwrap();
            assert!(linalg::max_abs(&(e - g.identity())) < 1e-12, "{}", g.name());
        }
    }

    #[test]
    fn exp_matches_general_series() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for g in all() {
            let x: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let m = g.lie_element(&x).unwrap();
            let ours = g.exp(&m).unwrap();
            assert!(linalg::max_abs(&(ours - m.exp())) < 1e-12, "{}", g.name());
        }
    }

    #[test]
    fn adjoint_stays_in_algebra() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for g in all() {
            for _ in 0..20 {
                let h: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let x: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let ad = g
                    .adjoint(&g.exp_coords(&h).unwrap(), &g.lie_element(&x).unwrap())
                    .unwrap();
                let (_, residual) = g.coordinates(&ad).unwrap();
                assert!(residual < 1e-8, "{} residual {residual}", g.name());
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let g = su2_diagonal();
        let x = [0.3, -1.2, 0.7];
        let (back, residual) = g.coordinates(&g.lie_element(&x).unwrap()).unwrap();
        assert!(residual < 1e-14);
        for (a, b) in back.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
        let (_, residual) = g.coordinates(&linalg::identity(2)).unwrap();
        assert!(residual > 0.5);
    }

    #[test]
    fn centralizer_of_torus_element() {
        let g = su2_diagonal();
        let t = g.exp_coords(&[0.4, 0.0, 0.0]).unwrap();
        assert_eq!(g.centralizer_basis(&t).unwrap().len(), 1);
        assert_eq!(g.centralizer_basis(&g.identity()).unwrap().len(), 3);
        let u = u1();
        assert_eq!(u.centralizer_basis(&u.exp_coords(&[2.0]).unwrap()).unwrap().len(), 1);
    }

    #[test]
    fn torus_coordinates() {
        let s = so2();
        let z = s.torus_coords(&s.exp_coords(&[0.7]).unwrap()).unwrap()[0];
        assert!((z - Complex64::from_polar(1.0, 0.7)).norm() < 1e-15);
        let zdot = s.torus_coords(&s.lie_element(&[0.7]).unwrap()).unwrap()[0];
        assert!((zdot - c(0.0, 0.7)).norm() < 1e-15);
        let weyl = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(-1., 0.), c(0., 0.)]);
        assert!(su2_diagonal().torus_coords(&weyl).is_err());
    }

    #[test]
    fn unknown_group() {
        assert!(matches!(group_by_name("E8"), Err(Error::Registry(_))));
    }
}
