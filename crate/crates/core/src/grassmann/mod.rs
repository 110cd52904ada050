//! Finite Grassmann algebras over C and the odd calculus on R^{1|1}.
//!
//! Odd parameters of families are modeled by reserving Grassmann generators;
//! the coefficient ring of every super computation in this crate is such an
//! algebra on at most [`MAX_GENERATORS`] generators.

mod e11;
mod element;
mod gauge;
mod matrix;
mod superfn;

pub use e11::{e11_compose, SuperPoint11};
pub use element::{grassmann_mul, koszul_sign, GrassmannElement, Parity, MAX_GENERATORS};
pub use gauge::{gauge_transform, reducing_gauge, GaugeMap, SuperConnectionForm, ThetaFunction};
pub use matrix::GrassmannMatrix;
pub use superfn::{apply_d, pullback_ev, DerivativePolicy, EvPullback, SuperFunction, SuperValue, DEFAULT_TIME_STEP};
