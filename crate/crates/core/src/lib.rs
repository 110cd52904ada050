//! Equivariant super parallel transport, equivariant super holonomy and the
//! bouquet of Chern characters for equivariant vector bundles over
//! chart-modeled G-manifolds.

// `!(r < tol)` is used on purpose so that NaN residuals fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chern;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod grassmann;
pub mod linalg;
pub mod ode;
pub mod scenario;
pub mod transport;

#[cfg(test)]
mod testkit;

pub use error::{Error, Result};
