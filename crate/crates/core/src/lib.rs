//! Numerical laboratory for the Monge-Ampere equation `det D^2 u = |x|^alpha`
//! on the unit disc.

// `!(x > y)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod expr;
pub mod field;
pub mod grid;
pub mod homogeneous;
pub mod invariants;
pub mod legendre;
pub mod linalg;
pub mod masolver;
pub mod quadrature;
pub mod regime;
pub mod sections;
pub mod spline;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use grid::DiscGrid;
pub use regime::Regime;
