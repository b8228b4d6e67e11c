//! Constructive background families.
//!
//! * [`make_warped_space`]: `dt² + σ(t)² Σ dx_s²` with `b = dt`, which obeys
//!   `∇_j b_i = k (a_ij − b_i b_j)` with `k = σ'/σ`.
//! * [`anisotropic_warped`]: `b = dt` again, but each spatial direction has its
//!   own warp, so `∇b` is symmetric without being proportional to `a − b⊗b`
//!   (for N ≥ 3).
//! * [`perturbed_euclidean`]: flat metric with a normalised one-form whose
//!   curl does not vanish, so `∇b` is not symmetric.
//! * [`tabulated`]: affine metric and one-form tables, normalised pointwise;
//!   no analytic derivatives, exercising the finite-difference path.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::invert_spd;
use crate::real::dot;
use crate::tensor::{Matrix, Tensor3};

use super::space::BackgroundSpace;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Warp function `σ(t)` and its derivative.
#[derive(Clone)]
pub struct WarpProfile {
    sigma: Arc<ScalarFn>,
    sigma_prime: Arc<ScalarFn>,
}

impl WarpProfile {
    pub fn new(
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WarpProfile { sigma: Arc::new(sigma), sigma_prime: Arc::new(sigma_prime) }
    }

    /// `σ(t) = e^{−κt}`, for which `k = −κ` everywhere.
    pub fn exponential(kappa: f64) -> Self {
        Self::new(move |t| (-kappa * t).exp(), move |t| -kappa * (-kappa * t).exp())
    }

    /// `σ(t) = 1 + λt`; positive only for `1 + λt > 0`.
    pub fn linear(lambda: f64) -> Self {
        Self::new(move |t| 1.0 + lambda * t, move |_| lambda)
    }

    pub fn constant() -> Self {
        Self::new(|_| 1.0, |_| 0.0)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        (self.sigma)(t)
    }

    pub fn sigma_prime(&self, t: f64) -> f64 {
        (self.sigma_prime)(t)
    }

    /// Proportionality factor `k(t) = σ'(t)/σ(t)`.
    pub fn k(&self, t: f64) -> f64 {
        self.sigma_prime(t) / self.sigma(t)
    }
}

pub fn make_warped_space(dim: usize, profile: &WarpProfile) -> Result<BackgroundSpace> {
    let (p1, p2, p3) = (profile.clone(), profile.clone(), profile.clone());
    Ok(BackgroundSpace::new(
        dim,
        "warped",
        move |x| {
            let s = p1.sigma(x[0]);
            Matrix::from_fn(dim, |i, j| match (i, j) {
                (0, 0) => 1.0,
                _ if i == j => s * s,
                _ => 0.0,
            })
        },
        move |_| unit(dim, 0),
    )?
    .with_analytic_dx(
        move |x| {
            let d = 2.0 * p2.sigma(x[0]) * p2.sigma_prime(x[0]);
            Tensor3::from_fn(dim, |i, j, k| if i == j && i > 0 && k == 0 { d } else { 0.0 })
        },
        move |_| Matrix::zeros(dim),
    )
    .with_domain_check(move |x| {
        let s = p3.sigma(x[0]);
        if s > 0.0 && s.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("warp sigma({}) = {s} is not positive", x[0])))
        }
    }))
}

fn unit(dim: usize, axis: usize) -> Vec<f64> {
    (0..dim).map(|i| if i == axis { 1.0 } else { 0.0 }).collect()
}

/// Flat metric with `b = e_0`.
pub fn euclidean(dim: usize) -> Result<BackgroundSpace> {
    euclidean_with_oneform(unit(dim, 0))
}

/// Flat metric with a constant one-form; `b` must have unit length.
pub fn euclidean_with_oneform(b: Vec<f64>) -> Result<BackgroundSpace> {
    let dim = b.len();
    let norm = dot(&b, &b).sqrt();
    if (norm - 1.0).abs() > super::space::UNIT_NORM_TOL {
        return Err(Error::Background(format!("constant one-form has length {norm}, expected 1")));
    }
    Ok(BackgroundSpace::new(dim, "euclidean", move |_| Matrix::identity(dim), move |_| b.clone())?
        .with_analytic_dx(move |_| Tensor3::zeros(dim), move |_| Matrix::zeros(dim)))
}

/// `w(x)` normalised in the flat metric, with `∂_k b_i` from the Jacobian of `w`.
fn normalised_flat(w: &[f64], jac: &Matrix<f64>) -> (Vec<f64>, Matrix<f64>) {
    let n = w.len();
    let norm = dot(w, w).sqrt();
    let b: Vec<f64> = w.iter().map(|v| v / norm).collect();
    let d = Matrix::from_fn(n, |i, k| {
        let proj: f64 = (0..n).map(|j| b[j] * jac[(j, k)]).sum();
        (jac[(i, k)] - b[i] * proj) / norm
    });
    (b, d)
}

/// `w = e_0 + ε(−x_1, x_0, 0, …)`, plus `ε x_0 x_1` in the third slot when N ≥ 3.
fn perturbation(dim: usize, eps: f64, x: &[f64]) -> (Vec<f64>, Matrix<f64>) {
    let mut w = unit(dim, 0);
    let mut jac = Matrix::zeros(dim);
    w[0] -= eps * x[1];
    w[1] += eps * x[0];
    jac[(0, 1)] = -eps;
    jac[(1, 0)] = eps;
    if dim >= 3 {
        w[2] += eps * x[0] * x[1];
        jac[(2, 0)] = eps * x[1];
        jac[(2, 1)] = eps * x[0];
    }
    (w, jac)
}

/// Flat metric, one-form with non-vanishing curl.
pub fn perturbed_euclidean(dim: usize, eps: f64) -> Result<BackgroundSpace> {
    Ok(BackgroundSpace::new(
        dim,
        "perturbed",
        move |_| Matrix::identity(dim),
        move |x| {
            let (w, jac) = perturbation(dim, eps, x);
            normalised_flat(&w, &jac).0
        },
    )?
    .with_analytic_dx(
        move |_| Tensor3::zeros(dim),
        move |x| {
            let (w, jac) = perturbation(dim, eps, x);
            normalised_flat(&w, &jac).1
        },
    ))
}

/// `dt² + Σ_s σ_s² dx_s²` with `σ_s = exp(α_s t + β sin x_s)` and `b = dt`.
pub fn anisotropic_warped(dim: usize, alphas: Vec<f64>, beta: f64) -> Result<BackgroundSpace> {
    if alphas.len() + 1 != dim {
        return Err(Error::Background(format!("need {} warp rates, got {}", dim - 1, alphas.len())));
    }
    let alphas = Arc::new(alphas);
    let al = alphas.clone();
    let diag = move |x: &[f64]| -> Vec<f64> {
        (0..dim)
            .map(|i| if i == 0 { 1.0 } else { (2.0 * (al[i - 1] * x[0] + beta * x[i].sin())).exp() })
            .collect()
    };
    let diag2 = diag.clone();
    Ok(BackgroundSpace::new(dim, "anisotropic", move |x| Matrix::diag(&diag(x)), move |_| unit(dim, 0))?
        .with_analytic_dx(
            move |x| {
                let d = diag2(x);
                Tensor3::from_fn(dim, |i, j, k| {
                    if i != j || i == 0 {
                        0.0
                    } else if k == 0 {
                        2.0 * alphas[i - 1] * d[i]
                    } else if k == i {
                        2.0 * beta * x[i].cos() * d[i]
                    } else {
                        0.0
                    }
                })
            },
            move |_| Matrix::zeros(dim),
        ))
}

/// Affine tables `a(x) = A₀ + Σ_k x^k A_k`, `w(x) = w₀ + W x`, with
/// `b = w / ‖w‖_a`. Derivatives come from finite differences.
pub fn tabulated(
    metric: Matrix<f64>,
    metric_slope: Vec<Matrix<f64>>,
    oneform: Vec<f64>,
    oneform_slope: Matrix<f64>,
) -> Result<BackgroundSpace> {
    let dim = metric.dim();
    if oneform.len() != dim || oneform_slope.dim() != dim {
        return Err(Error::Background("one-form table does not match the metric dimension".into()));
    }
    if metric_slope.len() != dim || metric_slope.iter().any(|m| m.dim() != dim) {
        return Err(Error::Background(format!("metric slope needs {dim} matrices of size {dim}x{dim}")));
    }
    let metric_at = Arc::new(move |x: &[f64]| {
        Matrix::from_fn(dim, |i, j| metric[(i, j)] + (0..dim).map(|k| x[k] * metric_slope[k][(i, j)]).sum::<f64>())
    });
    let m2 = metric_at.clone();
    BackgroundSpace::new(
        dim,
        "tabulated",
        move |x| metric_at(x),
        move |x| {
            let w: Vec<f64> = (0..dim)
                .map(|i| oneform[i] + (0..dim).map(|k| oneform_slope[(i, k)] * x[k]).sum::<f64>())
                .collect();
            // An indefinite metric is reported by geometry_at; normalise with
            // the raw covector so that error surfaces there.
            match invert_spd(&m2(x)) {
                Ok(inv) => {
                    let norm = inv.quad(&w, &w).sqrt();
                    w.iter().map(|v| v / norm).collect()
                }
                Err(_) => w,
            }
        },
    )
}

/// A fixed, generic tabulated background used by tests and examples.
pub fn tabulated_example(dim: usize) -> BackgroundSpace {
    let metric = Matrix::from_fn(dim, |i, j| if i == j { 1.0 + 0.5 * i as f64 } else { 0.15 / (1.0 + (i + j) as f64) });
    let slopes = (0..dim)
        .map(|k| Matrix::from_fn(dim, |i, j| if i == j { 0.1 * ((k + i) % 3) as f64 } else { 0.02 * k as f64 }))
        .collect();
    let oneform = (0..dim).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let oneform_slope = Matrix::from_fn(dim, |i, k| 0.2 * ((i + 2 * k) % 3) as f64 - 0.15);
    tabulated(metric, slopes, oneform, oneform_slope).expect("example tables are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::DiffConfig;

    #[test]
    fn warped_metric_and_unit_oneform() {
        let s = make_warped_space(3, &WarpProfile::exponential(0.5)).unwrap();
        let g = s.geometry_at(&[0.4, 1.0, -2.0]).unwrap();
        assert!((g.a[(1, 1)] - (-0.4f64).exp()).abs() < 1e-15);
        assert_eq!(g.b_dn, vec![1.0, 0.0, 0.0]);
        assert!((WarpProfile::exponential(0.5).k(0.4) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_positive_sigma_is_domain_error() {
        let s = make_warped_space(2, &WarpProfile::linear(1.0)).unwrap();
        assert!(s.geometry_at(&[-0.5, 0.0]).is_ok());
        assert!(matches!(s.geometry_at(&[-1.5, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn analytic_and_fd_derivatives_agree() {
        let cfg = DiffConfig::default();
        let x = [0.3, -0.2, 0.5];
        for s in [
            make_warped_space(3, &WarpProfile::exponential(2.0)).unwrap(),
            perturbed_euclidean(3, 0.3).unwrap(),
            anisotropic_warped(3, vec![0.4, -0.3], 0.2).unwrap(),
        ] {
            let a = s.metric_dx_at(&x, &cfg).unwrap();
            let b = s.without_analytic_dx().metric_dx_at(&x, &cfg).unwrap();
            assert!(crate::tensor::max_abs_diff(a.as_slice(), b.as_slice()) < 1e-9, "{}", s.label());
            let a = s.oneform_dx_at(&x, &cfg).unwrap();
            let b = s.without_analytic_dx().oneform_dx_at(&x, &cfg).unwrap();
            assert!(crate::tensor::max_abs_diff(a.as_slice(), b.as_slice()) < 1e-9, "{}", s.label());
        }
    }

    #[test]
    fn constant_oneform_must_be_unit() {
        assert!(euclidean_with_oneform(vec![0.6, 0.8]).is_ok());
        assert!(euclidean_with_oneform(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn tabulated_normalises_pointwise() {
        let s = tabulated_example(4);
        for x in [[0.0; 4], [0.3, -0.2, 0.1, 0.4]] {
            let g = s.geometry_at(&x).unwrap();
            assert!((dot(&g.b_dn, &g.b_up) - 1.0).abs() < 1e-12);
        }
        assert!(!s.has_analytic_dx());
    }
}
