use std::sync::Arc;

use rand::{Rng, SeedableRng};

use super::registry::{build_action, build_connection, ActionSpec, CocycleSpec, ConnectionSpec, Weight};
use super::*;
use crate::error::Error;
use crate::forms::FormValue;
use crate::linalg::{self, c, CMatrix, I};

fn geometry(
    group: GroupModel,
    chart: Chart,
    action: ActionSpec,
    cocycle: CocycleSpec,
    connection: ConnectionSpec,
    rank: usize,
) -> EquivariantGeometry {
    let a = build_action(&action, &cocycle, &group, &chart, rank).unwrap();
    let conn = build_connection(&connection, &chart, rank).unwrap();
    EquivariantGeometry::new(chart, group, a, conn).unwrap()
}

fn plane(connection: ConnectionSpec, weight: i64, fiber: i64) -> EquivariantGeometry {
    geometry(
        u1(),
        Chart::cube("plane", 2, 3.0, 33).unwrap(),
        ActionSpec::Rotation {
            weight: Weight::Single(weight),
        },
        CocycleSpec::Weights {
            weights: vec![Weight::Single(fiber)],
        },
        connection,
        1,
    )
}

/// The same geometry with every analytic callback dropped, so that all
/// derivatives go through finite differences.
fn numeric(geom: &EquivariantGeometry) -> EquivariantGeometry {
    let (g1, g2) = (geom.clone(), geom.clone());
    let g3 = geom.clone();
    let action = ActionModel::new(
        geom.rank(),
        Arc::new(move |g, p| g1.act(g, p)),
        Arc::new(move |g, p| g2.cocycle(g, p)),
    );
    let connection = ConnectionModel::new(Arc::new(move |p| g3.connection.potential(p)));
    EquivariantGeometry::new(geom.chart.clone(), geom.group.clone(), action, connection).unwrap()
}

fn monopole(n: i64) -> ConnectionSpec {
    ConnectionSpec::Monopole {
        charge: Some(n),
        charges: None,
    }
}

#[test]
fn exterior_derivative_of_constant_vanishes() {
    let chart = Chart::cube("c", 2, 1.0, 4).unwrap();
    let f = |_: &[f64]| Ok(FormValue::scalar(2, 0b01, c(3.0, -1.0)));
    let d = exterior_derivative(&chart, &f, &[0.2, 0.3], 1e-4).unwrap();
    assert_eq!(d.max_abs(), 0.0);
}

#[test]
fn exterior_derivative_of_x2_dx1() {
    let chart = Chart::cube("c", 2, 1.0, 4).unwrap();
    let f = |p: &[f64]| Ok(FormValue::scalar(2, 0b01, c(p[1], 0.0)));
    for p in [[0.1, 0.2], [-0.5, 0.7]] {
        let d = exterior_derivative(&chart, &f, &p, 1e-4).unwrap();
        let want = FormValue::scalar(2, 0b11, c(-1.0, 0.0));
        assert!(d.try_sub(&want).unwrap().max_abs() < 1e-8);
    }
}

#[test]
fn exterior_derivative_squares_to_zero() {
    let chart = Chart::cube("c", 2, 2.0, 4).unwrap();
    let f = |p: &[f64]| Ok(FormValue::scalar(2, 0, c(p[0].sin() * p[1].cos(), 0.0)));
    let df = |p: &[f64]| exterior_derivative(&chart, &f, p, 1e-4);
    let ddf = exterior_derivative(&chart, &df, &[0.3, -0.4], 1e-4).unwrap();
    assert!(ddf.max_abs() < 1e-6);
}

#[test]
fn exterior_derivative_near_boundary_is_rejected() {
    let chart = Chart::cube("c", 2, 1.0, 4).unwrap();
    let f = |_: &[f64]| Ok(FormValue::zero(2, 1));
    assert!(matches!(
        exterior_derivative(&chart, &f, &[1.0, 0.0], 1e-4),
        Err(Error::Domain(_))
    ));
}

#[test]
fn flat_and_uniform_curvature() {
    let flat = numeric(&plane(ConnectionSpec::Flat, 1, 0));
    assert!(finite_difference_curvature(&flat, &[0.3, 0.1], 1e-4).unwrap().max_abs() < 1e-14);
    let k = 0.7;
    let uniform = numeric(&plane(ConnectionSpec::Uniform { k }, 1, 0));
    for p in [[0.0, 0.0], [1.2, -0.4]] {
        let f = curvature(&uniform, &p).unwrap();
        let want = FormValue::scalar(2, 0b11, c(0.0, k));
        assert!(f.try_sub(&want).unwrap().max_abs() < 1e-8);
    }
}

#[test]
fn monopole_curvature_matches_hand_formula() {
    // d[i(x dy − y dx)/(1+r²)] = 2i/(1+r²)² dx∧dy
    let geom = numeric(&plane(monopole(1), 1, 0));
    for p in [[0.0f64, 0.0], [0.5, 0.5], [-1.3, 0.4], [2.0, -1.0]] {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let want = FormValue::scalar(2, 0b11, c(0.0, 2.0 / (1.0 + r2).powi(2)));
        let f = curvature(&geom, &p).unwrap();
        assert!(f.try_sub(&want).unwrap().max_abs() < 1e-6, "at {p:?}");
    }
}

#[test]
fn analytic_and_numeric_curvature_agree() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for spec in [ConnectionSpec::Flat, ConnectionSpec::Uniform { k: -1.5 }, monopole(3)] {
        let geom = plane(spec, 2, 1);
        for _ in 0..20 {
            let p = [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
            let analytic = curvature(&geom, &p).unwrap();
            let fd = finite_difference_curvature(&geom, &p, DEFAULT_EXTERIOR_STEP).unwrap();
            assert!(analytic.try_sub(&fd).unwrap().max_abs() < 1e-5);
        }
    }
}

#[test]
fn fundamental_field_of_rotation() {
    let geom = numeric(&plane(ConnectionSpec::Flat, 1, 0));
    let x = geom.group.lie_element(&[1.0]).unwrap();
    let v = fundamental_vector_field(&geom, &x, &[1.0, 0.0], DEFAULT_DERIVATIVE_STEP).unwrap();
    assert!((v.0[0]).abs() < 1e-9 && (v.0[1] - 1.0).abs() < 1e-9);
    let zero = fundamental_vector_field(&geom, &CMatrix::zeros(1, 1), &[1.0, 0.5], 1e-5).unwrap();
    assert_eq!(zero.norm(), 0.0);
    let at_origin = fundamental_vector_field(&geom, &x, &[0.0, 0.0], 1e-5).unwrap();
    assert!(at_origin.norm() < 1e-8);
    assert!(matches!(
        fundamental_vector_field(&geom, &x, &[5.0, 0.0], 1e-5),
        Err(Error::Domain(_))
    ));
}

#[test]
fn fundamental_field_is_linear() {
    let geom = numeric(&geometry(
        t2(),
        Chart::cube("plane", 2, 2.0, 9).unwrap(),
        ActionSpec::Rotation {
            weight: Weight::Multi(vec![2, -1]),
        },
        CocycleSpec::Trivial,
        ConnectionSpec::Flat,
        1,
    ));
    let p = [0.7, -0.3];
    let b: Vec<_> = geom
        .group
        .basis()
        .iter()
        .map(|x| fundamental_vector_field(&geom, x, &p, 1e-5).unwrap())
        .collect();
    let combo = geom.group.lie_element(&[0.4, -1.3]).unwrap();
    let v = fundamental_vector_field(&geom, &combo, &p, 1e-5).unwrap();
    for i in 0..2 {
        assert!((v.0[i] - (0.4 * b[0].0[i] - 1.3 * b[1].0[i])).abs() < 1e-8);
    }
}

#[test]
fn moment_is_zero_for_trivial_data() {
    let geom = geometry(
        u1(),
        Chart::cube("plane", 2, 1.0, 9).unwrap(),
        ActionSpec::Trivial,
        CocycleSpec::Trivial,
        ConnectionSpec::Flat,
        2,
    );
    let x = geom.group.lie_element(&[0.8]).unwrap();
    assert_eq!(linalg::max_abs(&moment(&geom, &x, &[0.1, 0.2]).unwrap()), 0.0);
}

#[test]
fn moment_on_a_point_is_the_infinitesimal_character() {
    for n in [-3i64, 1, 4] {
        let geom = numeric(&geometry(
            u1(),
            Chart::point("pt"),
            ActionSpec::Trivial,
            CocycleSpec::Weights {
                weights: vec![Weight::Single(n)],
            },
            ConnectionSpec::Flat,
            1,
        ));
        let xi = 0.37;
        let m = moment(&geom, &geom.group.lie_element(&[xi]).unwrap(), &[]).unwrap();
        assert!((m[(0, 0)] - I * (n as f64 * xi)).norm() < 1e-9);
    }
}

#[test]
fn moment_at_fixed_point_is_cocycle_derivative() {
    let geom = plane(monopole(2), 1, 3);
    let x = geom.group.lie_element(&[0.6]).unwrap();
    let m = moment(&geom, &x, &[0.0, 0.0]).unwrap();
    // independent finite difference of t ↦ c(e^{tX}, 0)
    let h = 1e-5;
    let cp = geom.cocycle(&u1().exp(&(&x * c(h, 0.0))).unwrap(), &[0.0, 0.0]);
    let cm = geom.cocycle(&u1().exp(&(&x * c(-h, 0.0))).unwrap(), &[0.0, 0.0]);
    let fd = (cp - cm) / c(2.0 * h, 0.0);
    assert!(linalg::max_abs(&(m - fd)) < 1e-7);
}

#[test]
fn moment_off_axis_on_uniform_plane() {
    // X = iξ, weight w: X_M = ξw(−y, x) and ι_{X_M}(ik/2)(x dy − y dx) = (ik/2)ξw r²
    let (k, w, xi) = (0.8, 2, 0.3);
    let geom = plane(ConnectionSpec::Uniform { k }, w, 0);
    let p = [0.4, -0.9];
    let r2 = p[0] * p[0] + p[1] * p[1];
    let m = moment(&geom, &geom.group.lie_element(&[xi]).unwrap(), &p).unwrap();
    assert!((m[(0, 0)] - I * (0.5 * k * xi * w as f64 * r2)).norm() < 1e-12);
    let num = moment(&numeric(&geom), &geom.group.lie_element(&[xi]).unwrap(), &p).unwrap();
    assert!(linalg::max_abs(&(num - m)) < 1e-8);
}

#[test]
fn equivariant_curvature_parts() {
    let geom = plane(ConnectionSpec::Uniform { k: 0.5 }, 1, 2);
    let p = [0.3, 0.2];
    let zero = CMatrix::zeros(1, 1);
    assert_eq!(
        equivariant_curvature(&geom, &zero, &p).unwrap(),
        curvature(&geom, &p).unwrap()
    );
    let x = geom.group.lie_element(&[0.7]).unwrap();
    let fx = equivariant_curvature(&geom, &x, &p).unwrap();
    let want = add_degree_zero(&curvature(&geom, &p).unwrap(), &moment(&geom, &x, &p).unwrap());
    assert_eq!(fx, want);
    let pt = geometry(
        u1(),
        Chart::point("pt"),
        ActionSpec::Trivial,
        CocycleSpec::Weights {
            weights: vec![Weight::Single(2)],
        },
        ConnectionSpec::Flat,
        1,
    );
    let fx = equivariant_curvature(&pt, &x, &[]).unwrap();
    assert!((fx.scalar_coeff(0) - I * 1.4).norm() < 1e-15);
}

#[test]
fn invariance_checks() {
    let g = u1().exp_coords(&[0.9]).unwrap();
    let samples = Chart::cube("s", 2, 2.0, 5).unwrap().grid_points(5);
    let trivial = geometry(
        u1(),
        Chart::cube("plane", 2, 3.0, 5).unwrap(),
        ActionSpec::Trivial,
        CocycleSpec::Trivial,
        monopole(1),
        1,
    );
    assert!(check_invariance(&trivial, &g, &samples).unwrap().max_residual < 1e-14);
    let geom = plane(monopole(2), 1, 1);
    assert!(check_invariance(&geom, &g, &samples).unwrap().max_residual < 1e-6);

    let base = geom.connection.clone();
    let broken = ConnectionModel::new(Arc::new(move |p| {
        let mut a = base.potential(p);
        *a.coeff_mut(0b01) += CMatrix::from_element(1, 1, c(0.0, 0.3 * p[0]));
        a
    }));
    let broken = EquivariantGeometry::new(geom.chart.clone(), geom.group.clone(), geom.action.clone(), broken).unwrap();
    let report = check_invariance(&broken, &g, &samples).unwrap();
    assert!(report.max_residual > 1e-2);
    assert_eq!(report.worst_point.len(), 2);
}

#[test]
fn cocycle_condition_on_random_triples() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(17);
    let geoms = [
        plane(monopole(1), 1, -2),
        geometry(
            t2(),
            Chart::cube("plane", 2, 2.0, 9).unwrap(),
            ActionSpec::Rotation {
                weight: Weight::Multi(vec![1, 1]),
            },
            CocycleSpec::Weights {
                weights: vec![Weight::Multi(vec![1, 0]), Weight::Multi(vec![0, 3])],
            },
            ConnectionSpec::Flat,
            2,
        ),
        geometry(
            su2_diagonal(),
            Chart::point("pt"),
            ActionSpec::Trivial,
            CocycleSpec::Defining,
            ConnectionSpec::Flat,
            2,
        ),
    ];
    for geom in &geoms {
        for _ in 0..50 {
            let coords = |rng: &mut rand::rngs::StdRng| -> Vec<f64> {
                (0..geom.group.dim()).map(|_| rng.random_range(-3.0..3.0)).collect()
            };
            let g = geom.group.exp_coords(&coords(&mut rng)).unwrap();
            let h = geom.group.exp_coords(&coords(&mut rng)).unwrap();
            let p: Vec<f64> = (0..geom.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = geom.cocycle(&(&g * &h), &p);
            let rhs = geom.cocycle(&g, &geom.act(&h, &p)) * geom.cocycle(&h, &p);
            assert!(linalg::max_abs(&(lhs - rhs)) < 1e-8);
            let e = geom.act(&geom.group.identity(), &p);
            let gh = geom.act(&(&g * &h), &p);
            let g_h = geom.act(&g, &geom.act(&h, &p));
            for i in 0..p.len() {
                assert!((e[i] - p[i]).abs() < 1e-10);
                assert!((gh[i] - g_h[i]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn strata_declarations() {
    let geom = plane(monopole(1), 1, 0);
    let e = geom.group.identity();
    let whole = chart_stratum(&geom, &e, "all").unwrap();
    assert_eq!(whole.dim(), 2);

    let g = geom.group.exp_coords(&[1.1]).unwrap();
    let fixed = find_fixed_points(&geom, &g, 33, 1e-8);
    assert_eq!(fixed, vec![vec![0.0, 0.0]]);
    assert!(point_stratum(&geom, &g, "pole", vec![0.0, 0.0]).is_ok());

    let axis = Chart::new("axis", vec![-1.0], vec![1.0], 5).unwrap();
    let err = declare_fixed_stratum(&geom, &g, "x-axis", axis, Arc::new(|q| vec![q[0], 0.0])).unwrap_err();
    match err {
        Error::Validation(msg) => assert!(msg.contains("x-axis") && msg.contains("[-1.0, 0.0]"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn flow_preserves_strata() {
    let geom = plane(monopole(1), 3, 0);
    let g = geom.group.exp_coords(&[0.4]).unwrap();
    let x = geom.group.lie_element(&[1.0]).unwrap();
    assert!(linalg::max_abs(&(geom.group.adjoint(&g, &x).unwrap() - &x)) < 1e-12);
    // a third-order rotation fixes only the origin; so does its flow
    let pole = point_stratum(&geom, &g, "pole", vec![0.0, 0.0]).unwrap();
    for t in [0.1, 0.5, 2.0] {
        let flow = geom.group.exp(&(&x * c(t, 0.0))).unwrap();
        for (_, p) in pole.samples(3) {
            let q = geom.act(&flow, &p);
            let back = geom.act(&g, &q);
            assert!(back.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-6));
        }
    }
}

#[test]
fn registry_rejects_mismatches() {
    let chart = Chart::point("pt");
    let weights = CocycleSpec::Weights {
        weights: vec![Weight::Single(1)],
    };
    assert!(build_action(
        &ActionSpec::Rotation {
            weight: Weight::Single(1)
        },
        &weights,
        &u1(),
        &chart,
        1
    )
    .is_err());
    assert!(build_action(&ActionSpec::Trivial, &weights, &u1(), &chart, 2).is_err());
    assert!(build_action(&ActionSpec::Trivial, &CocycleSpec::Defining, &u1(), &chart, 2).is_err());
    assert!(build_connection(&ConnectionSpec::Uniform { k: 1.0 }, &chart, 1).is_err());
    let plane = Chart::cube("p", 2, 1.0, 4).unwrap();
    let both = ConnectionSpec::Monopole {
        charge: Some(1),
        charges: Some(vec![1]),
    };
    assert!(build_connection(&both, &plane, 1).is_err());
    let spec: ConnectionSpec = serde_json::from_str(r#"{"family":"monopole","charges":[1,-2]}"#).unwrap();
    assert!(build_connection(&spec, &plane, 2).is_ok());
    assert!(serde_json::from_str::<ConnectionSpec>(r#"{"family":"monopole","charg":1}"#).is_err());
}
