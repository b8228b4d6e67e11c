//! Closed-form spray coefficients and their y-derivative cascade.

use serde::{Deserialize, Serialize};

use crate::background::{Connection, Frame};
use crate::error::Result;
use crate::finsleroid::{Charge, MetricEval};
use crate::real::Real;
use crate::tensor::{Matrix, Tensor3, Tensor4};

/// Scalars of the general ansatz and the Landsberg-type coefficient `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SprayScalars {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c: f64,
    pub k: f64,
}

impl SprayScalars {
    /// `c = c1·k`
    pub fn new(c1: f64, c2: f64, c3: f64, k: f64) -> Self {
        SprayScalars { c1, c2, c3, c: c1 * k, k }
    }

    /// Geodesic values of the Finsleroid metric: `(g, g², −g)`, `c = gk`.
    pub fn finsleroid(charge: &Charge, k: f64) -> Self {
        let g = charge.g;
        Self::new(g, g * g, -g, k)
    }
}

/// `G^i` and its y-derivatives `G^i_k`, `G^i_km`, `G^i_kmn` (first index is `i`).
#[derive(Clone, Debug)]
pub struct SprayCoeffs<T> {
    pub c: f64,
    pub g_up: Vec<T>,
    pub g1: Matrix<T>,
    pub g2: Tensor3<T>,
    pub g3: Tensor4<T>,
    pub g3_low: Option<Tensor4<T>>,
}

fn lift<T: Real>(v: f64) -> T {
    T::from_f64(v)
}

/// `G^i = c q v^i + a^i_km y^k y^m`
pub fn landsberg_spray<T: Real>(c: f64, frame: &Frame<T>, conn: &Connection) -> Vec<T> {
    let cq = lift::<T>(c) * frame.q;
    conn.riemann_spray(&frame.y).into_iter().zip(&frame.v_up).map(|(r, &v)| cq * v + r).collect()
}

/// The two contractions of `∇_j b_h` entering the general ansatz:
/// `(y^j y^h ∇_j b_h, y^h b^j ∇_j b_h)`.
pub fn nabla_b_contractions<T: Real>(frame: &Frame<T>, conn: &Connection) -> (T, T) {
    let n = frame.dim();
    let (mut yy, mut by) = (T::zero(), T::zero());
    for j in 0..n {
        for h in 0..n {
            let nb = lift::<T>(conn.nabla_b[(j, h)]);
            yy += frame.y[j] * nb * frame.y[h];
            by += frame.b_up[j] * nb * frame.y[h];
        }
    }
    (yy, by)
}

/// `G^i = c1 (1/q) y^j y^h ∇_j b_h v^i + c2 y^h b^j ∇_j b_h v^i + c3 q f^i + a^i_km y^k y^m`
pub fn general_spray<T: Real>(s: &SprayScalars, frame: &Frame<T>, conn: &Connection) -> Result<Vec<T>> {
    frame.require_off_axis()?;
    let q = frame.q;
    let (yy, by) = nabla_b_contractions(frame, conn);
    let cv = lift::<T>(s.c1) * yy / q + lift::<T>(s.c2) * by;
    let cf = lift::<T>(s.c3) * q;
    let f = conn.f_vector(&frame.y);
    let r = conn.riemann_spray(&frame.y);
    Ok((0..frame.dim()).map(|i| cv * frame.v_up[i] + cf * f[i] + r[i]).collect())
}

/// Finsleroid geodesic spray: the general ansatz with `(c1, c2, c3) = (g, g², −g)`.
pub fn geodesic_spray_closed<T: Real>(charge: &Charge, frame: &Frame<T>, conn: &Connection) -> Result<Vec<T>> {
    general_spray(&SprayScalars::finsleroid(charge, 0.0), frame, conn)
}

/// `G^i_k = (c/q)(v^i v_k + q² r^i_k) + 2 a^i_km y^m`
fn cascade_g1<T: Real>(c: f64, frame: &Frame<T>, conn: &Connection) -> Matrix<T> {
    let n = frame.dim();
    let (cq, q2) = (lift::<T>(c) / frame.q, frame.q * frame.q);
    Matrix::from_fn(n, |i, k| {
        let mut chr = T::zero();
        for m in 0..n {
            chr += lift::<T>(conn.christoffel[(i, k, m)]) * frame.y[m];
        }
        cq * (frame.v_up[i] * frame.v_dn[k] + q2 * frame.r_mixed[(i, k)]) + lift::<T>(2.0) * chr
    })
}

/// `G^i_km = (c/q)(r_km v^i − v^i v_k v_m/q² + v_m r^i_k + v_k r^i_m) + 2 a^i_km`
fn cascade_g2<T: Real>(c: f64, frame: &Frame<T>, conn: &Connection) -> Tensor3<T> {
    let (cq, q2) = (lift::<T>(c) / frame.q, frame.q * frame.q);
    let (v, vd, r, rm) = (&frame.v_up, &frame.v_dn, &frame.r_dn, &frame.r_mixed);
    Tensor3::from_fn(frame.dim(), |i, k, m| {
        let t = r[(k, m)] * v[i] - v[i] * vd[k] * vd[m] / q2 + vd[m] * rm[(i, k)] + vd[k] * rm[(i, m)];
        cq * t + lift::<T>(2.0 * conn.christoffel[(i, k, m)])
    })
}

/// `G^i_kmn` in the explicitly symmetric long form built from `v`, `r`.
pub fn cascade_g3_long<T: Real>(c: f64, frame: &Frame<T>) -> Result<Tensor4<T>> {
    frame.require_off_axis()?;
    let q = frame.q;
    let c = lift::<T>(c);
    let (c1, c3, c5) = (c / q, c / (q * q * q), lift::<T>(3.0) * c / q.powi(5));
    let (v, vd, r, rm) = (&frame.v_up, &frame.v_dn, &frame.r_dn, &frame.r_mixed);
    Ok(Tensor4::from_fn(frame.dim(), |i, k, m, n| {
        let quartic = v[i] * vd[k] * vd[m] * vd[n];
        let mixed = rm[(i, k)] * vd[m] * vd[n]
            + rm[(i, m)] * vd[k] * vd[n]
            + rm[(i, n)] * vd[k] * vd[m]
            + v[i] * (r[(k, m)] * vd[n] + r[(k, n)] * vd[m] + r[(m, n)] * vd[k]);
        let quad = rm[(i, k)] * r[(m, n)] + rm[(i, m)] * r[(k, n)] + rm[(i, n)] * r[(k, m)];
        c5 * quartic - c3 * mixed + c1 * quad
    }))
}

/// `G^i_kmn = (c/q)(η^i_k η_mn + η^i_m η_kn + η^i_n η_km)`
pub fn cascade_g3_eta<T: Real>(c: f64, frame: &Frame<T>) -> Result<Tensor4<T>> {
    let em = frame.eta_mixed()?;
    let ed = frame.eta_dn()?;
    let cq = lift::<T>(c) / frame.q;
    Ok(Tensor4::from_fn(frame.dim(), |i, k, m, n| {
        cq * (em[(i, k)] * ed[(m, n)] + em[(i, m)] * ed[(k, n)] + em[(i, n)] * ed[(k, m)])
    }))
}

/// Landsberg-type spray with its full derivative cascade; `G^i_kmn` from the η-form.
pub fn cascade_closed<T: Real>(c: f64, frame: &Frame<T>, conn: &Connection) -> Result<SprayCoeffs<T>> {
    frame.require_off_axis()?;
    Ok(SprayCoeffs {
        c,
        g_up: landsberg_spray(c, frame, conn),
        g1: cascade_g1(c, frame, conn),
        g2: cascade_g2(c, frame, conn),
        g3: cascade_g3_eta(c, frame)?,
        g3_low: None,
    })
}

/// `G_ikmn = (c/q)(H_ik H_mn + H_im H_kn + H_in H_km)`.
///
/// This equals `(K²/B) g_ij G^j_kmn`.
pub fn lowered_g<T: Real>(coeffs: &SprayCoeffs<T>, metric: &MetricEval<T>, frame: &Frame<T>) -> Result<Tensor4<T>> {
    frame.require_off_axis()?;
    let h = &metric.h_dn;
    let cq = lift::<T>(coeffs.c) / frame.q;
    Ok(Tensor4::from_fn(frame.dim(), |i, k, m, n| {
        cq * (h[(i, k)] * h[(m, n)] + h[(i, m)] * h[(k, n)] + h[(i, n)] * h[(k, m)])
    }))
}

impl<T: Real> SprayCoeffs<T> {
    pub fn with_lowered(mut self, metric: &MetricEval<T>, frame: &Frame<T>) -> Result<Self> {
        self.g3_low = Some(lowered_g(&self, metric, frame)?);
        Ok(self)
    }
}
