//! Spray fields bound to a point, the Christoffel-built geodesic spray and
//! the Landsberg test tensor `Ȧ_jkl`.

use serde::{Deserialize, Serialize};

use crate::background::{BackgroundSpace, Connection, Frame, PointGeometry};
use crate::error::Result;
use crate::finsleroid::{Charge, KSquared};
use crate::numkit::{derive_x, derive_y, derive_y_field, invert_spd, DiffConfig, FiberField};
use crate::real::Real;
use crate::tensor::{Matrix, Tensor3};

use super::closed::{general_spray, landsberg_spray, SprayScalars};

/// Which closed-form spray a [`SprayField`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SprayKind {
    /// `a^i_km y^k y^m`
    Riemann,
    Landsberg { c: f64 },
    General { scalars: SprayScalars },
}

impl SprayKind {
    pub fn finsleroid(charge: &Charge) -> Self {
        SprayKind::General { scalars: SprayScalars::finsleroid(charge, 0.0) }
    }
}

/// A closed-form spray as a function on the tangent fiber at one point.
#[derive(Clone, Copy, Debug)]
pub struct SprayField<'a> {
    pub kind: SprayKind,
    pub geom: &'a PointGeometry,
    pub conn: &'a Connection,
}

impl FiberField for SprayField<'_> {
    fn eval<T: Real>(&self, y: &[T]) -> Result<Vec<T>> {
        match self.kind {
            SprayKind::Riemann => Ok(self.conn.riemann_spray(y)),
            SprayKind::Landsberg { c } => Ok(landsberg_spray(c, &Frame::new(self.geom, y)?, self.conn)),
            SprayKind::General { scalars } => general_spray(&scalars, &Frame::new(self.geom, y)?, self.conn),
        }
    }
}

/// Evaluate a closed-form spray at `(x, y)` of a background.
pub fn spray_at(kind: SprayKind, space: &BackgroundSpace, x: &[f64], y: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>> {
    let geom = space.geometry_at(x)?;
    let conn = space.connection_at(x, cfg)?;
    SprayField { kind, geom: &geom, conn: &conn }.eval(y)
}

/// Finsleroid `g_ij(x, y) = ½ ∂²K²/∂y^i∂y^j`, taken from the Hessian of `K²`
/// so that it does not share code with the closed tensor formulas.
fn metric_from_k_squared(charge: &Charge, space: &BackgroundSpace, x: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
    let geom = space.geometry_at(x)?;
    let jet = derive_y(&KSquared { charge: *charge, geom: &geom }, y, 2, &DiffConfig::jets())?;
    Ok(jet.hess.map(|v| 0.5 * v))
}

/// `G^k = g^kn γ_inj y^i y^j` with
/// `γ_inj = ½(∂_j g_ni + ∂_i g_nj − ∂_n g_ji)`, the x-derivatives taken by
/// central differences at fixed y.
pub fn geodesic_spray_numeric(
    charge: &Charge,
    space: &BackgroundSpace,
    x: &[f64],
    y: &[f64],
    cfg: &DiffConfig,
) -> Result<Vec<f64>> {
    let n = space.dim();
    space.frame_at(x, y)?.require_off_axis()?;
    let g = metric_from_k_squared(charge, space, x, y)?;
    let g_inv = invert_spd(&g)?;
    let d = derive_x(|p| Ok(metric_from_k_squared(charge, space, p, y)?.as_slice().to_vec()), x, cfg)?;
    // dg(a, b, k) = ∂_k g_ab
    let dg = |a: usize, b: usize, k: usize| d[k][a * n + b];
    let lowered: Vec<f64> = (0..n)
        .map(|m| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += 0.5 * (dg(m, i, j) + dg(m, j, i) - dg(j, i, m)) * y[i] * y[j];
                }
            }
            s
        })
        .collect();
    Ok(g_inv.mul_vec(&lowered))
}

/// `Ȧ_jkl = −¼ y_i ∂³G^i/∂y^j∂y^k∂y^l` for a given covector `y_i`.
pub fn dot_a<F: FiberField>(field: &F, y_dn: &[f64], y: &[f64], cfg: &DiffConfig) -> Result<Tensor3<f64>> {
    let jets = derive_y_field(field, y, 3, cfg)?;
    let n = y.len();
    Ok(Tensor3::from_fn(n, |j, k, l| {
        -0.25 * jets.iter().zip(y_dn).map(|(jet, &yi)| yi * jet.third[(j, k, l)]).sum::<f64>()
    }))
}
