//! Generating metric functions: `V(w)` with `w = q/b` and `φ(s)` with `s = b/S`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

use super::charge::Charge;
use super::metric::phi_angle;

/// `φ(s)` is refused for `|s| ≥ 1 − S_MARGIN`.
pub const S_MARGIN: f64 = 1e-6;

/// Which half-space `b ≷ 0` the variable `w = q/b` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSign {
    Positive,
    Negative,
}

impl BranchSign {
    pub fn of(b: f64) -> Self {
        if b < 0.0 {
            BranchSign::Negative
        } else {
            BranchSign::Positive
        }
    }

    fn value<T: Real>(self) -> T {
        match self {
            BranchSign::Positive => T::one(),
            BranchSign::Negative => -T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratingV<T> {
    pub v: T,
    pub dv: T,
    pub ddv: T,
    /// `Q = 1 + gw + w²`
    pub q: T,
    pub phi: T,
}

/// `V(w) = √Q e^{GΦ(w)/2}`, so that `K = |b| V(q/b)`.
pub fn generating_v<T: Real>(charge: &Charge, w: T, sign: BranchSign) -> GeneratingV<T> {
    let g = T::from_f64(charge.g);
    let q = T::one() + g * w + w * w;
    // the ratio (w + g/2)/h carries the same information as L/(hb)
    let sg: T = sign.value();
    let l = sg * (w + T::from_f64(0.5 * charge.g));
    let phi = phi_angle(charge, l, sg * T::from_f64(charge.h));
    let v = q.sqrt() * (T::from_f64(0.5 * charge.big_g) * phi).exp();
    GeneratingV { v, dv: w * v / q, ddv: v / (q * q), q, phi }
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratingPhi<T> {
    pub phi: T,
    pub dphi: T,
    pub ddphi: T,
    /// the angle Φ(s)
    pub angle: T,
}

/// `φ(s) = √(1 + gs√(1−s²)) e^{GΦ(s)/2}`, so that `K = S φ(b/S)`.
pub fn generating_phi<T: Real>(charge: &Charge, s: T) -> Result<GeneratingPhi<T>> {
    let sp = s.primal();
    if !(sp.abs() < 1.0 - S_MARGIN) {
        return Err(Error::NearSingular(sp));
    }
    let g = T::from_f64(charge.g);
    let c = (T::one() - s * s).sqrt();
    let root = (T::one() + g * s * c).sqrt();
    let angle = phi_angle(charge, c + T::from_f64(0.5 * charge.g) * s, T::from_f64(charge.h) * s);
    let e = (T::from_f64(0.5 * charge.big_g) * angle).exp();
    Ok(GeneratingPhi {
        phi: root * e,
        dphi: g * c * e / root,
        ddphi: -(g * s * e) / (c * root * root * root),
        angle,
    })
}
