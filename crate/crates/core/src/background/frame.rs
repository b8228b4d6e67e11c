use crate::error::{Error, Result};
use crate::real::{dot, Real};
use crate::tensor::Matrix;

use super::space::PointGeometry;

/// Below `Q_MIN_REL · S` the η-tensors and every 1/q formula are refused.
pub const Q_MIN_REL: f64 = 1e-7;

/// Algebraic quantities at one `(x, y)`.
///
/// `b = b_i y^i`, `S² = a_ij y^i y^j`, `q² = r_ij y^i y^j` with
/// `r_ij = a_ij − b_i b_j`, `u_i = a_ij y^j`, `v^i = y^i − b b^i`,
/// `v_i = u_i − b b_i`.
#[derive(Clone, Debug)]
pub struct Frame<T> {
    pub y: Vec<T>,
    pub b: T,
    pub q: T,
    pub s: T,
    pub u: Vec<T>,
    pub v_up: Vec<T>,
    pub v_dn: Vec<T>,
    /// `r_ij`
    pub r_dn: Matrix<T>,
    /// `r^i_j = δ^i_j − b^i b_j`
    pub r_mixed: Matrix<T>,
    pub a: Matrix<T>,
    pub a_inv: Matrix<T>,
    pub b_dn: Vec<T>,
    pub b_up: Vec<T>,
}

impl<T: Real> Frame<T> {
    pub fn new(geom: &PointGeometry, y: &[T]) -> Result<Self> {
        let n = geom.dim();
        if y.len() != n {
            return Err(Error::Domain(format!("vector has {} components, expected {n}", y.len())));
        }
        if y.iter().all(|c| c.primal() == 0.0) {
            return Err(Error::Domain("y = 0".into()));
        }
        let a: Matrix<T> = geom.a.lift();
        let a_inv: Matrix<T> = geom.a_inv.lift();
        let b_dn: Vec<T> = crate::real::lift(&geom.b_dn);
        let b_up: Vec<T> = crate::real::lift(&geom.b_up);

        let u = a.mul_vec(y);
        let b = dot(&b_dn, y);
        let s = dot(&u, y).sqrt();
        let v_up: Vec<T> = y.iter().zip(&b_up).map(|(&yi, &bi)| yi - b * bi).collect();
        let v_dn: Vec<T> = u.iter().zip(&b_dn).map(|(&ui, &bi)| ui - b * bi).collect();
        let mut q2 = dot(&v_dn, &v_up);
        if q2.primal() < 0.0 {
            q2 = T::zero();
        }
        let q = q2.sqrt();
        let r_dn = Matrix::from_fn(n, |i, j| a[(i, j)] - b_dn[i] * b_dn[j]);
        let r_mixed = Matrix::from_fn(n, |i, j| {
            let d = if i == j { T::one() } else { T::zero() };
            d - b_up[i] * b_dn[j]
        });
        Ok(Frame { y: y.to_vec(), b, q, s, u, v_up, v_dn, r_dn, r_mixed, a, a_inv, b_dn, b_up })
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn q_min(&self) -> f64 {
        Q_MIN_REL * self.s.primal()
    }

    /// Error unless `q > q_min`, i.e. y is not (numerically) parallel to ±b.
    pub fn require_off_axis(&self) -> Result<()> {
        let (q, q_min) = (self.q.primal(), self.q_min());
        if q > q_min {
            Ok(())
        } else {
            Err(Error::NearCollinear { q, q_min })
        }
    }

    /// `η^i_j = r^i_j − v^i v_j / q²`
    pub fn eta_mixed(&self) -> Result<Matrix<T>> {
        self.require_off_axis()?;
        let q2 = self.q * self.q;
        Ok(Matrix::from_fn(self.dim(), |i, j| self.r_mixed[(i, j)] - self.v_up[i] * self.v_dn[j] / q2))
    }

    /// `η_ij = r_ij − v_i v_j / q²`
    pub fn eta_dn(&self) -> Result<Matrix<T>> {
        self.require_off_axis()?;
        let q2 = self.q * self.q;
        Ok(Matrix::from_fn(self.dim(), |i, j| self.r_dn[(i, j)] - self.v_dn[i] * self.v_dn[j] / q2))
    }
}
