use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{derive_x, invert_spd, DiffConfig};
use crate::real::{dot, Real};
use crate::tensor::{Matrix, Tensor3};

use super::connection::Connection;
use super::frame::Frame;

pub type MetricFn = dyn Fn(&[f64]) -> Matrix<f64> + Send + Sync;
pub type OneFormFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
/// `(i, j, k) = ∂a_ij/∂x^k`
pub type MetricDxFn = dyn Fn(&[f64]) -> Tensor3<f64> + Send + Sync;
/// `(i, k) = ∂b_i/∂x^k`
pub type OneFormDxFn = dyn Fn(&[f64]) -> Matrix<f64> + Send + Sync;
pub type DomainFn = dyn Fn(&[f64]) -> Result<()> + Send + Sync;

/// Tolerance on ‖b‖ = 1 at probed points.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// The associated Riemannian space: metric `a_ij(x)` and unit one-form
/// `b_i(x)` on a single global chart.
#[derive(Clone)]
pub struct BackgroundSpace {
    dim: usize,
    label: String,
    metric: Arc<MetricFn>,
    oneform: Arc<OneFormFn>,
    metric_dx: Option<Arc<MetricDxFn>>,
    oneform_dx: Option<Arc<OneFormDxFn>>,
    domain: Option<Arc<DomainFn>>,
}

impl fmt::Debug for BackgroundSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackgroundSpace")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("analytic_dx", &self.has_analytic_dx())
            .finish()
    }
}

/// Metric data at one base point.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub x: Vec<f64>,
    pub a: Matrix<f64>,
    pub a_inv: Matrix<f64>,
    pub b_dn: Vec<f64>,
    pub b_up: Vec<f64>,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.b_dn.len()
    }
}

impl BackgroundSpace {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        metric: impl Fn(&[f64]) -> Matrix<f64> + Send + Sync + 'static,
        oneform: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Background(format!("dimension must be at least 2, got {dim}")));
        }
        Ok(BackgroundSpace {
            dim,
            label: label.into(),
            metric: Arc::new(metric),
            oneform: Arc::new(oneform),
            metric_dx: None,
            oneform_dx: None,
            domain: None,
        })
    }

    pub fn with_analytic_dx(
        mut self,
        metric_dx: impl Fn(&[f64]) -> Tensor3<f64> + Send + Sync + 'static,
        oneform_dx: impl Fn(&[f64]) -> Matrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.metric_dx = Some(Arc::new(metric_dx));
        self.oneform_dx = Some(Arc::new(oneform_dx));
        self
    }

    pub fn with_domain_check(mut self, check: impl Fn(&[f64]) -> Result<()> + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(check));
        self
    }

    /// Same space with the analytic derivatives dropped, forcing the
    /// finite-difference path.
    pub fn without_analytic_dx(&self) -> Self {
        BackgroundSpace { metric_dx: None, oneform_dx: None, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_dx(&self) -> bool {
        self.metric_dx.is_some() && self.oneform_dx.is_some()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!("point has {} coordinates, space has dimension {}", x.len(), self.dim)));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        match &self.domain {
            Some(check) => check(x),
            None => Ok(()),
        }
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<Matrix<f64>> {
        self.check_point(x)?;
        let a = (self.metric)(x);
        if a.dim() != self.dim {
            return Err(Error::Background(format!("metric has dimension {}, expected {}", a.dim(), self.dim)));
        }
        Ok(a)
    }

    pub fn oneform_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let b = (self.oneform)(x);
        if b.len() != self.dim {
            return Err(Error::Background(format!("one-form has {} components, expected {}", b.len(), self.dim)));
        }
        Ok(b)
    }

    /// Metric, its inverse and the one-form at `x`, validating symmetry,
    /// positive-definiteness and ‖b‖ = 1.
    pub fn geometry_at(&self, x: &[f64]) -> Result<PointGeometry> {
        let a = self.metric_at(x)?;
        let b_dn = self.oneform_at(x)?;
        let n = self.dim;
        let scale = a.max_abs().max(1e-300);
        for i in 0..n {
            for j in i + 1..n {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Background(format!("metric is not symmetric at x = {x:?}")));
                }
            }
        }
        let a_inv = invert_spd(&a).map_err(|e| Error::Background(format!("metric at x = {x:?}: {e}")))?;
        let b_up = a_inv.mul_vec(&b_dn);
        let norm = dot(&b_dn, &b_up).sqrt();
        if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(Error::Background(format!("one-form has length {norm} at x = {x:?}, expected 1")));
        }
        Ok(PointGeometry { x: x.to_vec(), a, a_inv, b_dn, b_up })
    }

    /// `∂a_ij/∂x^k` as `(i, j, k)`, analytic when available.
    pub fn metric_dx_at(&self, x: &[f64], cfg: &DiffConfig) -> Result<Tensor3<f64>> {
        if let Some(d) = &self.metric_dx {
            self.check_point(x)?;
            return Ok(d(x));
        }
        let n = self.dim;
        let d = derive_x(|p| Ok(self.metric_at(p)?.as_slice().to_vec()), x, cfg)?;
        Ok(Tensor3::from_fn(n, |i, j, k| d[k][i * n + j]))
    }

    /// `∂b_i/∂x^k` as `(i, k)`, analytic when available.
    pub fn oneform_dx_at(&self, x: &[f64], cfg: &DiffConfig) -> Result<Matrix<f64>> {
        if let Some(d) = &self.oneform_dx {
            self.check_point(x)?;
            return Ok(d(x));
        }
        let d = derive_x(|p| self.oneform_at(p), x, cfg)?;
        Ok(Matrix::from_fn(self.dim, |i, k| d[k][i]))
    }

    pub fn connection_at(&self, x: &[f64], cfg: &DiffConfig) -> Result<Connection> {
        let geom = self.geometry_at(x)?;
        let a_dx = self.metric_dx_at(x, cfg)?;
        let b_dx = self.oneform_dx_at(x, cfg)?;
        Ok(Connection::from_derivatives(&geom, &a_dx, b_dx))
    }

    pub fn frame_at<T: Real>(&self, x: &[f64], y: &[T]) -> Result<Frame<T>> {
        Frame::new(&self.geometry_at(x)?, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(dim: usize, b: Vec<f64>) -> BackgroundSpace {
        BackgroundSpace::new(dim, "flat", move |_| Matrix::identity(dim), move |_| b.clone()).unwrap()
    }

    #[test]
    fn rejects_non_unit_oneform() {
        let s = flat(2, vec![1.0, 1.0]);
        assert!(matches!(s.geometry_at(&[0.0, 0.0]), Err(Error::Background(_))));
        let ok = flat(2, vec![0.6, 0.8]);
        let g = ok.geometry_at(&[0.0, 0.0]).unwrap();
        assert_eq!(g.b_up, vec![0.6, 0.8]);
    }

    #[test]
    fn rejects_indefinite_metric_and_bad_points() {
        let s = BackgroundSpace::new(2, "bad", |_| Matrix::diag(&[1.0, -1.0]), |_| vec![1.0, 0.0]).unwrap();
        assert!(s.geometry_at(&[0.0, 0.0]).is_err());
        let ok = flat(2, vec![1.0, 0.0]);
        assert!(matches!(ok.geometry_at(&[0.0]), Err(Error::Domain(_))));
        assert!(matches!(ok.geometry_at(&[f64::NAN, 0.0]), Err(Error::Domain(_))));
        assert!(BackgroundSpace::new(1, "line", |_| Matrix::identity(1), |_| vec![1.0]).is_err());
    }

    #[test]
    fn fd_derivatives_of_user_functions() {
        let s = BackgroundSpace::new(
            2,
            "curved",
            |x| Matrix::diag(&[1.0, (2.0 * x[0]).exp()]),
            |_| vec![1.0, 0.0],
        )
        .unwrap();
        let d = s.metric_dx_at(&[0.3, 0.1], &DiffConfig::default()).unwrap();
        assert!((d[(1, 1, 0)] - 2.0 * 0.6f64.exp()).abs() < 1e-9);
        assert!(d[(1, 1, 1)].abs() < 1e-12);
        assert!(s.oneform_dx_at(&[0.3, 0.1], &DiffConfig::default()).unwrap().max_abs() < 1e-12);
    }
}
