use serde::Serialize;

use crate::error::{Error, Result};

/// Finsleroid charge `g ∈ (−2, 2)` with its derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Charge {
    pub g: f64,
    /// `h = √(1 − g²/4)`
    pub h: f64,
    /// `G = g/h`
    pub big_g: f64,
    /// `g/2 + h`
    pub g_plus: f64,
    /// `g/2 − h`
    pub g_minus: f64,
}

impl Charge {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > -2.0 && g < 2.0) {
            return Err(Error::ChargeRange(g));
        }
        let h = (1.0 - 0.25 * g * g).sqrt();
        Ok(Charge { g, h, big_g: g / h, g_plus: 0.5 * g + h, g_minus: 0.5 * g - h })
    }

    /// `arctan(G/2)`, the value of Φ on the hyperplane `b = 0`.
    pub fn phi_at_equator(&self) -> f64 {
        (0.5 * self.big_g).atan()
    }
}
