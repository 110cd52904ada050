//! Small geometries shared by unit tests.

use crate::geometry::registry::{build_action, build_connection, ActionSpec, CocycleSpec, ConnectionSpec, Weight};
use crate::geometry::{su2_diagonal, u1, Chart, EquivariantGeometry, GroupModel};

pub fn geometry(
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

/// Charge-`charge` monopole on a stereographic chart of half-width `r`, with
/// the rotation acting on the fiber with weight `fiber`.
pub fn monopole_chart(charge: i64, fiber: i64, r: f64, grid: usize) -> EquivariantGeometry {
    geometry(
        u1(),
        Chart::cube("south", 2, r, grid)
            .unwrap()
            .with_orientation(-1.0)
            .unwrap(),
        ActionSpec::Rotation {
            weight: Weight::Single(1),
        },
        CocycleSpec::Weights {
            weights: vec![Weight::Single(fiber)],
        },
        ConnectionSpec::Monopole {
            charge: Some(charge),
            charges: None,
        },
        1,
    )
}

pub fn monopole_plane(charge: i64, fiber: i64) -> EquivariantGeometry {
    monopole_chart(charge, fiber, 4.0, 33)
}

pub fn uniform_plane(k: f64, weight: i64) -> EquivariantGeometry {
    geometry(
        u1(),
        Chart::cube("plane", 2, 2.0, 33).unwrap(),
        ActionSpec::Rotation {
            weight: Weight::Single(weight),
        },
        CocycleSpec::Trivial,
        ConnectionSpec::Uniform { k },
        1,
    )
}

pub fn point_weights(weights: &[i64]) -> EquivariantGeometry {
    geometry(
        u1(),
        Chart::point("pt"),
        ActionSpec::Trivial,
        CocycleSpec::Weights {
            weights: weights.iter().map(|w| Weight::Single(*w)).collect(),
        },
        ConnectionSpec::Flat,
        weights.len(),
    )
}

pub fn su2_point() -> EquivariantGeometry {
    geometry(
        su2_diagonal(),
        Chart::point("pt"),
        ActionSpec::Trivial,
        CocycleSpec::Defining,
        ConnectionSpec::Flat,
        2,
    )
}
