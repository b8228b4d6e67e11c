use crate::real::Real;
use crate::tensor::{Matrix, Tensor3};

use super::space::PointGeometry;

/// Levi-Civita data of the background at one point.
#[derive(Clone, Debug)]
pub struct Connection {
    /// `(k, i, j) = a^k_ij`
    pub christoffel: Tensor3<f64>,
    /// `(j, i) = ∇_j b_i`
    pub nabla_b: Matrix<f64>,
    /// `(m, n) = f_mn = ∂_m b_n − ∂_n b_m`
    pub f_form: Matrix<f64>,
    /// `(i, n) = f^i_n = a^ik f_kn`
    pub f_mixed: Matrix<f64>,
    /// `(i, k) = ∂b_i/∂x^k`
    pub oneform_dx: Matrix<f64>,
}

impl Connection {
    /// Assemble from `∂_k a_ij` (indexed `(i, j, k)`) and `∂_k b_i` (indexed `(i, k)`).
    pub fn from_derivatives(geom: &PointGeometry, a_dx: &Tensor3<f64>, b_dx: Matrix<f64>) -> Self {
        let n = geom.dim();
        let first_kind = Tensor3::from_fn(n, |m, i, j| 0.5 * (a_dx[(m, i, j)] + a_dx[(m, j, i)] - a_dx[(j, i, m)]));
        let christoffel = Tensor3::from_fn(n, |k, i, j| {
            (0..n).map(|m| geom.a_inv[(k, m)] * first_kind[(m, i, j)]).sum()
        });
        let nabla_b = Matrix::from_fn(n, |j, i| {
            b_dx[(i, j)] - (0..n).map(|k| christoffel[(k, j, i)] * geom.b_dn[k]).sum::<f64>()
        });
        let f_form = Matrix::from_fn(n, |m, l| b_dx[(l, m)] - b_dx[(m, l)]);
        let f_mixed = geom.a_inv.matmul(&f_form);
        Connection { christoffel, nabla_b, f_form, f_mixed, oneform_dx: b_dx }
    }

    pub fn dim(&self) -> usize {
        self.nabla_b.dim()
    }

    /// Riemannian spray `a^i_km y^k y^m`.
    pub fn riemann_spray<T: Real>(&self, y: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = T::zero();
                for k in 0..n {
                    let mut row = T::zero();
                    for (m, &ym) in y.iter().enumerate() {
                        row += T::from_f64(self.christoffel[(i, k, m)]) * ym;
                    }
                    s += row * y[k];
                }
                s
            })
            .collect()
    }

    /// `f^i = f^i_n y^n`.
    pub fn f_vector<T: Real>(&self, y: &[T]) -> Vec<T> {
        self.f_mixed.lift::<T>().mul_vec(y)
    }

    /// Least-squares fit of `∇_j b_i = k (a_ij − b_i b_j)`; returns `(k, max residual)`.
    pub fn concircular_fit(&self, geom: &PointGeometry) -> (f64, f64) {
        let n = self.dim();
        let r = Matrix::from_fn(n, |i, j| geom.a[(i, j)] - geom.b_dn[i] * geom.b_dn[j]);
        let rr: f64 = r.as_slice().iter().map(|v| v * v).sum();
        let nr: f64 = r.as_slice().iter().zip(self.nabla_b.as_slice()).map(|(a, b)| a * b).sum();
        let k = if rr > 0.0 { nr / rr } else { 0.0 };
        let res = r
            .as_slice()
            .iter()
            .zip(self.nabla_b.as_slice())
            .fold(0.0f64, |m, (rv, nb)| m.max((nb - k * rv).abs()));
        (k, res)
    }

    /// Largest `|∇_j b_i − ∇_i b_j|`.
    pub fn nabla_b_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                m = m.max((self.nabla_b[(i, j)] - self.nabla_b[(j, i)]).abs());
            }
        }
        m
    }
}
