//! Named analytic families of actions, cocycles and connections.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chart::Chart;
use super::group::GroupModel;
use super::model::{ActionModel, ConnectionModel};
use crate::error::{Error, Result};
use crate::forms::FormValue;
use crate::linalg::{self, c, cpowi, CMatrix, RMatrix, I};

/// One integer weight per torus factor; a bare integer is accepted for
/// one-dimensional tori.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Single(i64),
    Multi(Vec<i64>),
}

impl Weight {
    fn components(&self, rank: usize) -> Result<Vec<i64>> {
        let w = match self {
            Weight::Single(n) => vec![*n],
            Weight::Multi(v) => v.clone(),
        };
        if w.len() != rank {
            return Err(Error::Dimension(format!("weight {w:?} for a torus of rank {rank}")));
        }
        Ok(w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ActionSpec {
    Trivial,
    /// Rotation of `R² ≅ C` by the character `Π z_k^{w_k}` of the torus.
    Rotation {
        weight: Weight,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CocycleSpec {
    Trivial,
    /// Diagonal fiber action, one torus weight per fiber line.
    Weights {
        weights: Vec<Weight>,
    },
    /// `c(g, p) = g`
    Defining,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Flat,
    /// `(ik/2)(x dy − y dx)` on every fiber line.
    Uniform {
        k: f64,
    },
    /// `i n (x dy − y dx)/(1 + r²)`, one charge per fiber line or one shared.
    Monopole {
        #[serde(default)]
        charge: Option<i64>,
        #[serde(default)]
        charges: Option<Vec<i64>>,
    },
}

fn torus_rank(group: &GroupModel) -> Result<usize> {
    Ok(group.torus_coords(&group.identity())?.len())
}

/// `Π z_k^{w_k}` and its velocity `Σ w_k ż_k`.
fn character(group: &GroupModel, w: &[i64], g: &CMatrix) -> Complex64 {
    let z = group.torus_coords(g).expect("torus coordinates");
    z.iter().zip(w).fold(c(1.0, 0.0), |acc, (z, n)| acc * cpowi(*z, *n))
}

fn character_velocity(group: &GroupModel, w: &[i64], x: &CMatrix) -> Complex64 {
    let z = group.torus_coords(x).expect("torus coordinates");
    z.iter().zip(w).map(|(z, n)| z * *n as f64).sum()
}

fn rotate(u: Complex64, p: &[f64]) -> Vec<f64> {
    let z = u * Complex64::new(p[0], p[1]);
    vec![z.re, z.im]
}

pub fn build_action(
    action: &ActionSpec,
    cocycle: &CocycleSpec,
    group: &GroupModel,
    chart: &Chart,
    rank: usize,
) -> Result<ActionModel> {
    let n = chart.dim();
    let (act, generator, jacobian): (super::model::ActFn, super::model::GeneratorFn, super::model::JacobianFn) =
        match action {
            ActionSpec::Trivial => (
                Arc::new(|_, p| p.to_vec()),
                Arc::new(move |_, _| vec![0.0; n]),
                Arc::new(move |_, _| RMatrix::identity(n, n)),
            ),
            ActionSpec::Rotation { weight } => {
                if n != 2 {
                    return Err(Error::Dimension(format!("rotation action on a {n}-dimensional chart")));
                }
                let w = weight.components(torus_rank(group)?)?;
                let (g1, g2, g3) = (group.clone(), group.clone(), group.clone());
                let (w1, w2, w3) = (w.clone(), w.clone(), w);
                (
                    Arc::new(move |g, p| rotate(character(&g1, &w1, g), p)),
                    Arc::new(move |x, p| rotate(character_velocity(&g2, &w2, x), p)),
                    Arc::new(move |g, _| {
                        let u = character(&g3, &w3, g);
                        RMatrix::from_row_slice(2, 2, &[u.re, -u.im, u.im, u.re])
                    }),
                )
            }
        };
    let (cocycle_fn, derivative): (super::model::CocycleFn, super::model::CocycleFn) = match cocycle {
        CocycleSpec::Trivial => (
            Arc::new(move |_, _| linalg::identity(rank)),
            Arc::new(move |_, _| CMatrix::zeros(rank, rank)),
        ),
        CocycleSpec::Weights { weights } => {
            if weights.len() != rank {
                return Err(Error::Dimension(format!(
                    "{} cocycle weights for rank {rank}",
                    weights.len()
                )));
            }
            let t = torus_rank(group)?;
            let w: Vec<Vec<i64>> = weights.iter().map(|w| w.components(t)).collect::<Result<_>>()?;
            let (g1, g2) = (group.clone(), group.clone());
            let w1 = w.clone();
            (
                Arc::new(move |g, _| linalg::diag(&w1.iter().map(|w| character(&g1, w, g)).collect::<Vec<_>>())),
                Arc::new(move |x, _| {
                    linalg::diag(&w.iter().map(|w| character_velocity(&g2, w, x)).collect::<Vec<_>>())
                }),
            )
        }
        CocycleSpec::Defining => {
            if group.matrix_size() != rank {
                return Err(Error::Dimension(format!(
                    "defining representation of {} has rank {}, bundle has rank {rank}",
                    group.name(),
                    group.matrix_size()
                )));
            }
            (Arc::new(|g, _| g.clone()), Arc::new(|x, _| x.clone()))
        }
    };
    Ok(ActionModel::new(rank, act, cocycle_fn)
        .with_generator(generator)
        .with_jacobian(jacobian)
        .with_cocycle_derivative(derivative))
}

pub fn build_connection(spec: &ConnectionSpec, chart: &Chart, rank: usize) -> Result<ConnectionModel> {
    let n = chart.dim();
    match spec {
        ConnectionSpec::Flat => {
            let zero = FormValue::zero(n, rank);
            let z2 = zero.clone();
            Ok(ConnectionModel::new(Arc::new(move |_| zero.clone())).with_curvature(Arc::new(move |_| z2.clone())))
        }
        ConnectionSpec::Uniform { k } => {
            require_plane(n, "uniform")?;
            let k = *k;
            Ok(ConnectionModel::new(Arc::new(move |p| {
                let half = linalg::identity(rank) * (I * (k / 2.0));
                let mut a = FormValue::zero(2, rank);
                *a.coeff_mut(0b01) = &half * c(-p[1], 0.0);
                *a.coeff_mut(0b10) = &half * c(p[0], 0.0);
                a
            }))
            .with_curvature(Arc::new(move |_| {
                FormValue::basis(2, 0b11, linalg::identity(rank) * (I * k))
            })))
        }
        ConnectionSpec::Monopole { charge, charges } => {
            require_plane(n, "monopole")?;
            let charges = match (charge, charges) {
                (Some(q), None) => vec![*q; rank],
                (None, Some(v)) if v.len() == rank => v.clone(),
                (None, Some(v)) => {
                    return Err(Error::Dimension(format!(
                        "{} monopole charges for rank {rank}",
                        v.len()
                    )))
                }
                _ => {
                    return Err(Error::Validation(
                        "monopole needs exactly one of 'charge' or 'charges'".into(),
                    ))
                }
            };
            let q = linalg::diag(&charges.iter().map(|n| I * *n as f64).collect::<Vec<_>>());
            let q2 = q.clone();
            Ok(ConnectionModel::new(Arc::new(move |p| {
                let s = 1.0 / (1.0 + p[0] * p[0] + p[1] * p[1]);
                let mut a = FormValue::zero(2, rank);
                *a.coeff_mut(0b01) = &q * c(-p[1] * s, 0.0);
                *a.coeff_mut(0b10) = &q * c(p[0] * s, 0.0);
                a
            }))
            .with_curvature(Arc::new(move |p| {
                let s = 1.0 / (1.0 + p[0] * p[0] + p[1] * p[1]);
                FormValue::basis(2, 0b11, &q2 * c(2.0 * s * s, 0.0))
            })))
        }
    }
}

fn require_plane(n: usize, what: &str) -> Result<()> {
    if n != 2 {
        return Err(Error::Dimension(format!(
            "{what} connection needs a 2-dimensional chart, got {n}"
        )));
    }
    Ok(())
}

pub fn describe_families() -> Vec<(&'static str, &'static str)> {
    vec![
        ("action/trivial", "every group element acts as the identity"),
        (
            "action/rotation",
            "rotation of the plane by a torus character with integer weight(s)",
        ),
        ("cocycle/trivial", "identity fiber action"),
        ("cocycle/weights", "diagonal fiber action by torus characters"),
        ("cocycle/defining", "fiber action by the group matrix itself"),
        ("connection/flat", "zero connection form"),
        ("connection/uniform", "(ik/2)(x dy - y dx), constant curvature ik"),
        (
            "connection/monopole",
            "i n (x dy - y dx)/(1+r^2) on the stereographic chart",
        ),
    ]
}
