//! Chart-based model of a `G`-manifold with an equivariant vector bundle and
//! invariant connection.

mod chart;
mod group;
mod model;
pub mod registry;

pub use chart::Chart;
pub use group::{group_by_name, so2, su2_diagonal, t2, u1, ExpFn, GroupModel, TorusFn, CENTRALIZER_TOL, GROUP_NAMES};
pub use model::{
    add_degree_zero, chart_stratum, check_invariance, cocycle_derivative, curvature, declare_fixed_stratum,
    equivariant_curvature, exterior_derivative, find_fixed_points, finite_difference_curvature,
    fundamental_vector_field, moment, point_stratum, ActFn, ActionModel, CocycleFn, ConnectionModel, EmbeddingFn,
    EmbeddingJacobianFn, EquivariantGeometry, FieldFn, FixedStratum, GeneratorFn, InvarianceReport, JacobianFn,
    DEFAULT_DERIVATIVE_STEP, DEFAULT_EXTERIOR_STEP, FIXED_POINT_TOL,
};

#[cfg(test)]
mod tests;
