use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;

use super::*;
use crate::geometry::registry::{ActionSpec, CocycleSpec, ConnectionSpec};
use crate::geometry::{u1, Chart};
use crate::grassmann::SuperConnectionForm;
use crate::linalg::I;
use crate::testkit::{geometry, monopole_plane, point_weights, uniform_plane};

fn rel_err(a: &FormValue, b: &FormValue) -> f64 {
    a.try_sub(b).unwrap().max_abs() / b.max_abs()
}

#[test]
fn flat_connection_transports_trivially() {
    let geom = geometry(
        u1(),
        Chart::cube("plane", 2, 2.0, 9).unwrap(),
        ActionSpec::Trivial,
        CocycleSpec::Trivial,
        ConnectionSpec::Flat,
        2,
    );
    let shape = PathShape::Circle {
        center: vec![0.2, 0.1],
        radius: 0.7,
        turns: 1.0,
    };
    let problem = TransportProblem::new(geom, SuperPath::with_generators(shape, 2)).unwrap();
    let sol = integrate_parallel(&problem, 64).unwrap();
    assert!((&sol.fundamental - &GrassmannMatrix::identity(2, 2)).max_abs() < 1e-15);
}

/// Abelian transport is `exp(−∫ A(ẋ) dt)`; the integral is computed by
/// composite Simpson quadrature, independently of the matrix integrator.
fn abelian_oracle(geom: &EquivariantGeometry, shape: &PathShape) -> Complex64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let integrand = |s: f64| {
        let (x, v) = shape.eval(s);
        let a = geom.connection.potential(&x);
        a.scalar_coeff(0b01) * v[0] + a.scalar_coeff(0b10) * v[1]
    };
    let mut sum = integrand(0.0) + integrand(1.0);
    for k in 1..n {
        sum += integrand(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    (-(sum * h / 3.0)).exp()
}

#[test]
fn even_paths_reproduce_ordinary_transport() {
    let geom = monopole_plane(2, 0);
    let shapes = [
        PathShape::Circle {
            center: vec![0.0, 0.0],
            radius: 1.3,
            turns: 1.0,
        },
        PathShape::Circle {
            center: vec![0.4, -0.3],
            radius: 0.9,
            turns: 2.0,
        },
        PathShape::Polyline {
            points: vec![vec![-1.0, 0.2], vec![1.0, 0.5]],
        },
    ];
    for shape in shapes {
        let problem = TransportProblem::new(geom.clone(), SuperPath::even(shape.clone()).unwrap()).unwrap();
        let u = integrate_interval(&problem, 0.0, 1.0, 1024).unwrap();
        let oracle = abelian_oracle(&geom, &shape);
        assert!((u.entry(0, 0).body() - oracle).norm() < 1e-8, "{shape:?}");
    }
    // closed form on the centered circle: exp(−2πi n r²/(1+r²))
    let r: f64 = 1.3;
    let shape = PathShape::Circle {
        center: vec![0.0, 0.0],
        radius: r,
        turns: 1.0,
    };
    let problem = TransportProblem::new(geom, SuperPath::even(shape).unwrap()).unwrap();
    let u = integrate_parallel(&problem, DEFAULT_STEPS).unwrap();
    let exact = (-I * (TAU * 2.0 * r * r / (1.0 + r * r))).exp();
    assert!((u.fundamental.entry(0, 0).body() - exact).norm() < 1e-8);
    assert!(!u.under_resolved);
}

#[test]
fn constant_super_loop_is_exp_of_curvature() {
    for (geom, x) in [
        (monopole_plane(3, 0), vec![0.4, -1.1]),
        (uniform_plane(0.8, 1), vec![0.3, 0.2]),
    ] {
        let problem = TransportProblem::new(geom.clone(), SuperPath::constant_generic(x.clone())).unwrap();
        let sol = integrate_parallel(&problem, DEFAULT_STEPS).unwrap();
        let ode = grassmann_to_form(&sol.fundamental, 2).unwrap();
        let f = geometry::curvature(&geom, &x).unwrap();
        let closed = forms::exp_even(&f, DEFAULT_EXP_TOL).unwrap();
        assert!(rel_err(&ode, &closed) < 1e-8);
        let e = geom.group.identity();
        let zero = CMatrix::zeros(1, 1);
        let shc = super_holonomy_constant(&geom, &x, &zero, &e).unwrap();
        assert!(rel_err(&shc, &closed) < 1e-15);
    }
}

#[test]
fn point_holonomy_is_the_character() {
    let n = 3;
    let geom = point_weights(&[n]);
    let (phi, xi) = (0.7, -0.45);
    let h = geom.group.exp_coords(&[phi]).unwrap();
    let a = geom.group.lie_element(&[xi]).unwrap();
    let hol = super_holonomy_constant(&geom, &[], &a, &h).unwrap();
    let want = (I * (n as f64 * (phi + xi))).exp();
    assert!((hol.scalar_coeff(0) - want).norm() < 1e-13);

    let problem = TransportProblem::new(geom.clone(), SuperPath::constant_generic(vec![]))
        .unwrap()
        .with_datum(a, h)
        .unwrap();
    let ode = equivariant_holonomy_ode(&problem, 16).unwrap();
    assert!((ode.holonomy.entry(0, 0).body() - want).norm() < 1e-13);
}

#[test]
fn pole_holonomy_matches_closed_form() {
    let geom = monopole_plane(2, -1);
    let (phi, xi) = (2.1, 0.6);
    let h = geom.group.exp_coords(&[phi]).unwrap();
    let a = geom.group.lie_element(&[xi]).unwrap();
    let x = vec![0.0, 0.0];
    let problem = TransportProblem::new(geom.clone(), SuperPath::constant_generic(x.clone()))
        .unwrap()
        .with_datum(a.clone(), h.clone())
        .unwrap();
    let ode = grassmann_to_form(&equivariant_holonomy_ode(&problem, DEFAULT_STEPS).unwrap().holonomy, 2).unwrap();
    let closed = super_holonomy_constant(&geom, &x, &a, &h).unwrap();
    assert!(ode.try_sub(&closed).unwrap().max_abs() < 1e-7);
}

#[test]
fn off_axis_equivariant_loop_sees_the_moment() {
    // h = e fixes every point; the lifted curve e^{−ta}x circles the origin
    // and the holonomy must equal exp(F(x) + μ(a)(x)).
    for (geom, x, xi) in [
        (monopole_plane(2, 1), vec![0.8, -0.5], 0.9),
        (uniform_plane(0.6, 2), vec![0.5, 0.4], -1.3),
    ] {
        let a = geom.group.lie_element(&[xi]).unwrap();
        let e = geom.group.identity();
        let problem = TransportProblem::new(geom.clone(), SuperPath::constant_generic(x.clone()))
            .unwrap()
            .with_datum(a.clone(), e.clone())
            .unwrap();
        let res = equivariant_holonomy_ode(&problem, DEFAULT_STEPS).unwrap();
        let ode = grassmann_to_form(&res.holonomy, 2).unwrap();
        let closed = super_holonomy_constant(&geom, &x, &a, &e).unwrap();
        assert!(rel_err(&ode, &closed) < 1e-9, "error {}", rel_err(&ode, &closed));
        // the opposite moment sign is far off
        let mut wrong = geometry::curvature(&geom, &x).unwrap();
        *wrong.coeff_mut(0) -= geometry::moment(&geom, &a, &x).unwrap();
        let wrong = forms::exp_even(&wrong, DEFAULT_EXP_TOL).unwrap();
        assert!(rel_err(&ode, &wrong) > 1e-2);
    }
}

#[test]
fn gauge_reduced_datum_gives_identical_holonomy() {
    use crate::grassmann::GrassmannElement as G;
    let geom = point_weights(&[1, -2]);
    let q = 2;
    let xi = 0.8;
    let ix = CMatrix::from_element(1, 1, I);
    let odd = &G::generator(q, 0).scale(c(0.3, 0.0)) + &G::generator(q, 1).scale(c(0.0, -1.1));
    let with_alpha = SuperConnectionForm::new(
        GrassmannMatrix::from_tensor(&ix, &odd),
        GrassmannMatrix::from_tensor(&(&ix * c(xi, 0.0)), &G::one(q)),
    )
    .unwrap();
    let plain = SuperConnectionForm::constant(GrassmannMatrix::from_tensor(&(&ix * c(xi, 0.0)), &G::one(q))).unwrap();
    let h = geom.group.exp_coords(&[0.4]).unwrap();
    let path = SuperPath::constant_generic(vec![]);
    let hol = |conn: &SuperConnectionForm| {
        let p = TransportProblem::from_super_connection(geom.clone(), path.clone(), conn, h.clone()).unwrap();
        equivariant_holonomy_ode(&p, 64).unwrap().holonomy.trace()
    };
    let (t1, t2) = (hol(&with_alpha), hol(&plain));
    assert!((&t1 - &t2).max_abs() < 1e-8);
    assert_eq!(
        reduced_constant_datum(&with_alpha).unwrap(),
        reduced_constant_datum(&plain).unwrap()
    );
}

#[test]
fn nilpotent_reduced_datum_is_rejected() {
    use crate::grassmann::GrassmannElement as G;
    let q = 2;
    let a = GrassmannMatrix::from_tensor(&CMatrix::from_element(1, 1, I), &G::monomial(q, 0b11, c(1.0, 0.0)));
    let conn = SuperConnectionForm::constant(a).unwrap();
    assert!(matches!(reduced_constant_datum(&conn), Err(Error::Validation(_))));
}

#[test]
fn loop_validation() {
    let geom = monopole_plane(1, 0);
    let closed = PathShape::Circle {
        center: vec![0.3, 0.3],
        radius: 0.5,
        turns: 1.0,
    };
    let p = TransportProblem::new(geom.clone(), SuperPath::even(closed).unwrap()).unwrap();
    assert!(loop_validate(&p).unwrap().passed);

    let h = geom.group.exp_coords(&[1.0]).unwrap();
    let a = geom.group.lie_element(&[0.3]).unwrap();
    let off = TransportProblem::new(geom.clone(), SuperPath::constant_generic(vec![1.0, 0.0]))
        .unwrap()
        .with_datum(a.clone(), h.clone())
        .unwrap();
    let report = loop_validate(&off).unwrap();
    assert_eq!(report.ad_residual, 0.0);
    assert!(!report.passed);
    assert!(report.fixed_point_residual.unwrap() > 0.1);
    assert!(matches!(
        equivariant_holonomy_ode(&off, 8),
        Err(Error::LoopValidation(_))
    ));
    assert!(matches!(
        super_holonomy_constant(&geom, &[1.0, 0.0], &a, &h),
        Err(Error::LoopValidation(_))
    ));

    // an arc closed up by the group: x(0) = act(h e^{a}, y(1))
    let quarter = PathShape::Polyline {
        points: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    let rot = geom.group.exp_coords(&[-PI / 2.0]).unwrap();
    let arc = TransportProblem::new(geom, SuperPath::even(quarter).unwrap())
        .unwrap()
        .with_datum(CMatrix::zeros(1, 1), rot)
        .unwrap();
    let report = loop_validate(&arc).unwrap();
    assert!(report.passed, "{}", report.describe());
}

#[test]
fn nonabelian_centralizer_condition() {
    let geom = geometry(
        crate::geometry::su2_diagonal(),
        Chart::point("pt"),
        ActionSpec::Trivial,
        CocycleSpec::Defining,
        ConnectionSpec::Flat,
        2,
    );
    let h = geom.group.exp_coords(&[0.7, 0.0, 0.0]).unwrap();
    let inside = geom.group.lie_element(&[0.4, 0.0, 0.0]).unwrap();
    let outside = geom.group.lie_element(&[0.0, 0.4, 0.0]).unwrap();
    let path = SuperPath::constant_generic(vec![]);
    let ok = TransportProblem::new(geom.clone(), path.clone())
        .unwrap()
        .with_datum(inside, h.clone())
        .unwrap();
    assert!(loop_validate(&ok).unwrap().passed);
    let bad = TransportProblem::new(geom, path)
        .unwrap()
        .with_datum(outside, h)
        .unwrap();
    assert!(loop_validate(&bad).unwrap().ad_residual > 0.1);
}

#[test]
fn infinitesimal_loops() {
    let eps = [1e-2, 5e-3];
    let flat = geometry(
        u1(),
        Chart::cube("plane", 2, 1.0, 5).unwrap(),
        ActionSpec::Trivial,
        CocycleSpec::Trivial,
        ConnectionSpec::Flat,
        1,
    );
    let zero = CMatrix::zeros(1, 1);
    let e = flat.group.identity();
    let r = infinitesimal_holonomy(&flat, &[0.1, 0.2], &zero, &e, &eps, 64).unwrap();
    assert!(r.limit.max_abs() < 1e-12);

    let mono = monopole_plane(2, 0);
    let x = [0.5, -0.3];
    let r = infinitesimal_holonomy(&mono, &x, &zero, &e, &eps, 64).unwrap();
    let f = geometry::curvature(&mono, &x).unwrap();
    assert!(r.limit.try_sub(&f).unwrap().max_abs() < 1e-6);

    let pt = point_weights(&[3]);
    let xi = 0.1;
    let a = pt.group.lie_element(&[xi]).unwrap();
    let r = infinitesimal_holonomy(&pt, &[], &a, &e, &eps, 64).unwrap();
    assert!((r.limit.scalar_coeff(0) - I * (3.0 * xi)).norm() < 1e-6);
    assert!(r.deviation < 1e-6);

    assert!(infinitesimal_holonomy(&pt, &[], &a, &e, &[1e-3, 1e-2], 8).is_err());
}

#[test]
fn richardson_removes_leading_orders() {
    // D(ε) = 1 + 2ε + 3ε²
    let d = |e: f64| FormValue::scalar(0, 0, c(1.0 + 2.0 * e + 3.0 * e * e, 0.0));
    let one = richardson(&[(0.1, d(0.1)), (0.05, d(0.05))]).unwrap();
    assert!((one.scalar_coeff(0).re - 1.0).abs() < 0.02);
    let two = richardson(&[(0.1, d(0.1)), (0.05, d(0.05)), (0.025, d(0.025))]).unwrap();
    assert!((two.scalar_coeff(0).re - 1.0).abs() < 1e-13);
}

#[test]
fn flow_property_and_order() {
    let geom = monopole_plane(1, 0);
    let shape = PathShape::Circle {
        center: vec![0.2, 0.0],
        radius: 1.0,
        turns: 1.0,
    };
    let a = geom.group.lie_element(&[0.5]).unwrap();
    let problem = TransportProblem::new(geom, SuperPath::with_generators(shape, 2))
        .unwrap()
        .with_datum(a, crate::linalg::identity(1))
        .unwrap();
    let whole = integrate_interval(&problem, 0.0, 1.0, 256).unwrap();
    let first = integrate_interval(&problem, 0.0, 0.5, 128).unwrap();
    let second = integrate_interval(&problem, 0.5, 1.0, 128).unwrap();
    let composed = second.try_mul(&first).unwrap();
    assert!((&whole - &composed).max_abs() < 1e-9);
    let order = observed_order(&problem, 16).unwrap();
    assert!(order > 3.7, "order {order}");
}

#[test]
fn chart_exit_is_reported() {
    let geom = monopole_plane(1, 0);
    let shape = PathShape::Polyline {
        points: vec![vec![0.0, 0.0], vec![10.0, 0.0]],
    };
    let problem = TransportProblem::new(geom, SuperPath::even(shape).unwrap()).unwrap();
    match integrate_parallel(&problem, 16) {
        Err(Error::ChartExit { time, .. }) => assert!(time > 0.3 && time < 0.5, "time {time}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn coarse_steps_are_flagged() {
    let geom = monopole_plane(40, 0);
    let shape = PathShape::Circle {
        center: vec![0.0, 0.0],
        radius: 1.0,
        turns: 3.0,
    };
    let problem = TransportProblem::new(geom, SuperPath::even(shape).unwrap()).unwrap();
    assert!(integrate_parallel(&problem, 4).unwrap().under_resolved);
}

#[test]
fn section_components_round_trip() {
    use crate::grassmann::GrassmannElement as G;
    let geom = monopole_plane(1, 0);
    let x = [0.3, 0.7];
    let q = 3;
    let psi = vec![
        G::generator(q, 0),
        &G::generator(q, 1) + &G::monomial(q, 0b111, c(0.5, 0.0)),
    ];
    let ap = odd_connection_term(&geom, &x, &psi).unwrap();
    let v = GrassmannMatrix::from_fn(1, 1, q, |_, _| {
        &G::scalar(q, c(1.0, 2.0)) + &G::monomial(q, 0b011, c(0.0, 1.0))
    })
    .unwrap();
    let w = GrassmannMatrix::from_fn(1, 1, q, |_, _| G::generator(q, 2).scale(c(-0.7, 0.0))).unwrap();
    let section = ThetaSection {
        v: v.clone(),
        w: w.clone(),
    };
    let state = components(&section, &ap, 0.0).unwrap();
    assert_eq!(reconstruct(&state, &ap).unwrap(), section);

    // constant fiber vector on the flat point: (v, 0); θ-part passes through
    let flat = point_weights(&[0]);
    let none = odd_connection_term(&flat, &[], &[]).unwrap();
    let none = GrassmannMatrix::zeros(1, 1, q)
        .try_mul(&none)
        .unwrap_or(GrassmannMatrix::zeros(1, 1, q));
    let s = components(
        &ThetaSection {
            v: v.clone(),
            w: GrassmannMatrix::zeros(1, 1, q),
        },
        &none,
        0.0,
    )
    .unwrap();
    assert_eq!(s.s1.max_abs(), 0.0);
    let s = components(
        &ThetaSection {
            v: v.clone(),
            w: w.clone(),
        },
        &none,
        0.0,
    )
    .unwrap();
    assert_eq!(s.s1, w);
    assert!(matches!(
        components(&ThetaSection { v: w.clone(), w: v }, &ap, 0.0),
        Err(Error::Parity(_))
    ));

    // parallel sections: s₁ = 0 reconstructs to w = −A(ψ) s₀, which is odd
    let parallel = SectionState {
        t: 0.0,
        s0: state.s0.clone(),
        s1: GrassmannMatrix::zeros(1, 1, q),
    };
    let back = reconstruct(&parallel, &ap).unwrap();
    assert_eq!(components(&back, &ap, 0.0).unwrap().s1.max_abs(), 0.0);
}

#[test]
fn odd_data_may_depend_on_time() {
    use crate::grassmann::GrassmannElement as G;
    // ψ(t) = (θ₁, e^{t}θ₂) on a constant path: F̃(t) = e^{t} F₁₂ θ₁θ₂, so the
    // holonomy is 1 + (e − 1) F₁₂ θ₁θ₂.
    let geom = uniform_plane(0.5, 1);
    let odd = OddData::Function(Arc::new(|t: f64| {
        vec![G::generator(2, 0), G::generator(2, 1).scale(c(t.exp(), 0.0))]
    }));
    let path = SuperPath::new(PathShape::Constant { point: vec![0.1, 0.1] }, odd, 2).unwrap();
    let problem = TransportProblem::new(geom, path).unwrap();
    let u = integrate_parallel(&problem, DEFAULT_STEPS).unwrap().fundamental;
    let want = c(0.0, 0.5 * (1f64.exp() - 1.0));
    assert!((u.entry(0, 0).coeff(0b11) - want).norm() < 1e-12);
}
