//! Small dense square arrays indexed by tangent-space components.

use std::ops::{Index, IndexMut};

use crate::real::Real;

/// N×N array, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn diag(d: &[T]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { T::zero() })
    }

    /// Build from row vectors; `None` if the rows do not form a square array.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    /// `vᵀ M`, i.e. contraction on the first index.
    pub fn vec_mul(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| (0..self.n).fold(T::zero(), |acc, i| acc + v[i] * self[(i, j)]))
            .collect()
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).fold(T::zero(), |acc, k| acc + self[(i, k)] * o[(k, j)]))
    }

    /// `uᵀ M v`.
    pub fn quad(&self, u: &[T], v: &[T]) -> T {
        crate::real::dot(u, &self.mul_vec(v))
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { n: self.n, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn primal(&self) -> Matrix<f64> {
        self.map(|x| x.primal())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)].primal()).collect()).collect()
    }
}

impl Matrix<f64> {
    pub fn lift<T: Real>(&self) -> Matrix<T> {
        self.map(T::from_f64)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// N×N×N array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(n: usize) -> Self {
        Tensor3 { n, data: vec![T::zero(); n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn primal(&self) -> Tensor3<f64> {
        Tensor3 { n: self.n, data: self.data.iter().map(|x| x.primal()).collect() }
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self[(i, j, k)].primal()).collect()).collect())
            .collect()
    }
}

impl Tensor3<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<T> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &T {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl<T> IndexMut<(usize, usize, usize)> for Tensor3<T> {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut T {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// N×N×N×N array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    pub fn zeros(n: usize) -> Self {
        Tensor4 { n, data: vec![T::zero(); n * n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        data.push(f(i, j, k, l));
                    }
                }
            }
        }
        Tensor4 { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn primal(&self) -> Tensor4<f64> {
        Tensor4 { n: self.n, data: self.data.iter().map(|x| x.primal()).collect() }
    }
}

impl Tensor4<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<T> Index<(usize, usize, usize, usize)> for Tensor4<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &T {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

impl<T> IndexMut<(usize, usize, usize, usize)> for Tensor4<T> {
    #[inline]
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut T {
        &mut self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }
}

/// Largest absolute entry of a slice of reals.
pub fn max_abs<T: Real>(v: &[T]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.primal().abs()))
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x.primal() - y.primal()).abs()))
}

/// Difference relative to the larger magnitude of the two arrays, with an
/// absolute floor of 1e-12 on the denominator.
pub fn rel_diff<T: Real>(a: &[T], b: &[T]) -> f64 {
    let scale = max_abs(a).max(max_abs(b)).max(1e-12);
    max_abs_diff(a, b) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_products() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let id = Matrix::<f64>::identity(2);
        assert_eq!(a.matmul(&id), a);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(a.vec_mul(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(a.quad(&[1.0, 0.0], &[0.0, 1.0]), 2.0);
        assert_eq!(a.transpose()[(0, 1)], 3.0);
        assert!(Matrix::from_rows(&[vec![1.0, 2.0]]).is_none());
    }

    #[test]
    fn tensor_layout() {
        let t = Tensor3::from_fn(3, |i, j, k| (100 * i + 10 * j + k) as f64);
        assert_eq!(t[(2, 1, 0)], 210.0);
        let q = Tensor4::from_fn(2, |i, j, k, l| (1000 * i + 100 * j + 10 * k + l) as f64);
        assert_eq!(q[(1, 0, 1, 1)], 1011.0);
        assert_eq!(q.max_abs(), 1111.0);
    }

    #[test]
    fn relative_difference_floor() {
        assert_eq!(rel_diff(&[0.0], &[0.0]), 0.0);
        assert!((rel_diff(&[1.0, 2.0], &[1.0, 2.002]) - 0.001 / 1.0005).abs() < 1e-3);
    }
}
