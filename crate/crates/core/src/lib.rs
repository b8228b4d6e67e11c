//! Finsleroid-regular spaces over a Riemannian background with a 1-form:
//! the metric function, its tensors, the closed geodesic spray and its
//! derivative cascade, numeric cross-checks and geodesic integration.
//!
//! The core is generic over [`Real`], which covers `f32`, `f64` and the
//! nested [`Dual`] numbers used for exact fiber derivatives. The `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; index loops
// follow the tensor notation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dual;
pub mod error;
pub mod numkit;
pub mod real;
pub mod tensor;

pub mod background;
pub mod config;
pub mod finsleroid;
pub mod geodesics;
pub mod spray;
pub mod verify;

pub use dual::Dual;
pub use error::{Error, Result};
pub use real::Real;

pub type Frame64 = background::Frame<f64>;
pub type Matrix64 = tensor::Matrix<f64>;
pub type Tensor3_64 = tensor::Tensor3<f64>;
pub type Tensor4_64 = tensor::Tensor4<f64>;
pub type KEval64 = finsleroid::KEval<f64>;
pub type MetricEval64 = finsleroid::MetricEval<f64>;
pub type GeneratingV64 = finsleroid::GeneratingV<f64>;
pub type GeneratingPhi64 = finsleroid::GeneratingPhi<f64>;
pub type SprayCoeffs64 = spray::SprayCoeffs<f64>;
