//! Spray coefficients: the general ansatz linear in `∇b`, the Landsberg-type
//! form with its derivative cascade, and the geodesic spray of the metric.

mod closed;
mod numeric;

pub use closed::{
    cascade_closed, cascade_g3_eta, cascade_g3_long, general_spray, geodesic_spray_closed, landsberg_spray, lowered_g,
    nabla_b_contractions, SprayCoeffs, SprayScalars,
};
pub use numeric::{dot_a, geodesic_spray_numeric, spray_at, SprayField, SprayKind};
