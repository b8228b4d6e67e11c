//! Differentiation and small-matrix linear algebra shared by the closed
//! forms and their oracles.

mod diff;
mod linalg;

pub use diff::{derive_x, derive_y, derive_y_field, DiffConfig, DiffMethod, FiberField, FiberScalar, Jet3};
pub use linalg::{cholesky, det_spd, invert_spd};
