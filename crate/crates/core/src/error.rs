use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A function was evaluated outside its domain (y = 0, non-finite value at a stencil point, ...).
    #[error("evaluation domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive-definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// y is (numerically) parallel to ±b, where the 1/q terms are refused.
    #[error("y is nearly collinear with b: q = {q:e} <= q_min = {q_min:e}")]
    NearCollinear { q: f64, q_min: f64 },

    #[error("generating function argument |s| = {0} is within the singular margin of 1")]
    NearSingular(f64),

    #[error("Finsleroid charge g = {0} is outside the admissible range -2 < g < 2")]
    ChargeRange(f64),

    #[error("invalid background: {0}")]
    Background(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite state during integration at t = {0}")]
    NonFinite(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
