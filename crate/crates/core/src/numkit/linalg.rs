use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Matrix;

/// Lower Cholesky factor `L` with `m = L Lᵀ`.
pub fn cholesky<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d.primal() > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d.primal() });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn invert_spd<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.dim();
    let l = cholesky(m)?;
    // L⁻¹ by forward substitution, then M⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = Matrix::zeros(n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { T::one() } else { T::zero() };
            for k in c..i {
                s -= l[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = s / l[(i, i)];
        }
    }
    let mut inv = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = T::zero();
            for k in i..n {
                s += linv[(k, i)] * linv[(k, j)];
            }
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    Ok(inv)
}

/// Determinant of a symmetric positive-definite matrix.
pub fn det_spd<T: Real>(m: &Matrix<T>) -> Result<T> {
    let l = cholesky(m)?;
    let mut d = T::one();
    for i in 0..m.dim() {
        d *= l[(i, i)];
    }
    Ok(d * d)
}
