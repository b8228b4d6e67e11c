//! Derivatives of fiber functions (functions of y at a fixed base point)
//! by nested forward-mode duals or by Richardson-extrapolated central
//! differences, plus first x-derivatives of arbitrary flattened fields.

use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{Matrix, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffMethod {
    #[serde(alias = "jets")]
    ForwardJets,
    #[serde(alias = "fd")]
    CentralFd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffConfig {
    pub method: DiffMethod,
    pub fd_step_scale: f64,
    #[serde(alias = "levels")]
    pub richardson_levels: u32,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig { method: DiffMethod::ForwardJets, fd_step_scale: 10.0, richardson_levels: 3 }
    }
}

impl DiffConfig {
    pub fn jets() -> Self {
        Self::default()
    }

    pub fn central_fd(richardson_levels: u32) -> Self {
        DiffConfig { method: DiffMethod::CentralFd, richardson_levels, ..Self::default() }
    }

    pub fn with_step_scale(mut self, scale: f64) -> Self {
        self.fd_step_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step_scale > 0.0) || !self.fd_step_scale.is_finite() {
            return Err(Error::Config(format!("fd_step_scale must be > 0, got {}", self.fd_step_scale)));
        }
        if !(1..=4).contains(&self.richardson_levels) {
            return Err(Error::Config(format!(
                "richardson_levels must lie in [1, 4], got {}",
                self.richardson_levels
            )));
        }
        Ok(())
    }
}

/// Value and y-derivatives up to third order of one scalar.
///
/// Entries above `order` are left at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet3 {
    pub order: u8,
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Matrix<f64>,
    pub third: Tensor3<f64>,
}

impl Jet3 {
    fn zeros(n: usize, order: u8) -> Self {
        Jet3 { order, value: 0.0, grad: vec![0.0; n], hess: Matrix::zeros(n), third: Tensor3::zeros(n) }
    }
}

/// Scalar function on the tangent fiber at a fixed base point.
pub trait FiberScalar {
    fn eval<T: Real>(&self, y: &[T]) -> Result<T>;
}

/// Vector- or tensor-valued (flattened) function on the tangent fiber.
pub trait FiberField {
    fn eval<T: Real>(&self, y: &[T]) -> Result<Vec<T>>;
}

impl<F: FiberScalar> FiberField for ScalarField<'_, F> {
    fn eval<T: Real>(&self, y: &[T]) -> Result<Vec<T>> {
        Ok(vec![self.0.eval(y)?])
    }
}

struct ScalarField<'a, F>(&'a F);

/// Derivatives of a scalar fiber function with respect to y.
pub fn derive_y<F: FiberScalar>(f: &F, y: &[f64], order: u8, cfg: &DiffConfig) -> Result<Jet3> {
    let mut jets = derive_y_field(&ScalarField(f), y, order, cfg)?;
    Ok(jets.swap_remove(0))
}

/// Derivatives of every component of a fiber field with respect to y.
pub fn derive_y_field<F: FiberField>(
    f: &F,
    y: &[f64],
    order: u8,
    cfg: &DiffConfig,
) -> Result<Vec<Jet3>> {
    if !(1..=3).contains(&order) {
        return Err(Error::Config(format!("derivative order must be 1, 2 or 3, got {order}")));
    }
    cfg.validate()?;
    match cfg.method {
        DiffMethod::ForwardJets => jets(f, y, order),
        DiffMethod::CentralFd => central(f, y, order, cfg),
    }
}

fn check_finite<T: Real>(vals: &[T]) -> Result<()> {
    match vals.iter().position(|v| !v.is_finite()) {
        Some(c) => Err(Error::Domain(format!("non-finite value in component {c}"))),
        None => Ok(()),
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

fn jets<F: FiberField>(f: &F, y: &[f64], order: u8) -> Result<Vec<Jet3>> {
    type D1 = Dual<f64>;
    type D2 = Dual<D1>;
    type D3 = Dual<D2>;
    let n = y.len();
    let mut out: Vec<Jet3> = Vec::new();
    let init = |len: usize, out: &mut Vec<Jet3>| {
        if out.is_empty() {
            *out = vec![Jet3::zeros(n, order); len];
        }
    };

    match order {
        1 => {
            for j in 0..n {
                let seeded: Vec<D1> = (0..n).map(|i| Dual::new(y[i], delta(i, j))).collect();
                let r = f.eval(&seeded)?;
                check_finite(&r)?;
                init(r.len(), &mut out);
                for (jet, v) in out.iter_mut().zip(&r) {
                    jet.value = v.re;
                    jet.grad[j] = v.eps;
                }
            }
        }
        2 => {
            for j in 0..n {
                for k in j..n {
                    let seeded: Vec<D2> = (0..n)
                        .map(|i| Dual::new(Dual::new(y[i], delta(i, k)), Dual::new(delta(i, j), 0.0)))
                        .collect();
                    let r = f.eval(&seeded)?;
                    check_finite(&r)?;
                    init(r.len(), &mut out);
                    for (jet, v) in out.iter_mut().zip(&r) {
                        jet.value = v.re.re;
                        jet.grad[k] = v.re.eps;
                        jet.grad[j] = v.eps.re;
                        jet.hess[(j, k)] = v.eps.eps;
                        jet.hess[(k, j)] = v.eps.eps;
                    }
                }
            }
        }
        _ => {
            for j in 0..n {
                for k in j..n {
                    for l in k..n {
                        let seeded: Vec<D3> = (0..n)
                            .map(|i| {
                                Dual::new(
                                    Dual::new(Dual::new(y[i], delta(i, l)), Dual::new(delta(i, k), 0.0)),
                                    Dual::new(Dual::new(delta(i, j), 0.0), Dual::new(0.0, 0.0)),
                                )
                            })
                            .collect();
                        let r = f.eval(&seeded)?;
                        check_finite(&r)?;
                        init(r.len(), &mut out);
                        for (jet, v) in out.iter_mut().zip(&r) {
                            jet.value = v.re.re.re;
                            jet.grad[l] = v.re.re.eps;
                            jet.grad[k] = v.re.eps.re;
                            jet.grad[j] = v.eps.re.re;
                            for (a, b, d) in [(k, l, v.re.eps.eps), (j, l, v.eps.re.eps), (j, k, v.eps.eps.re)] {
                                jet.hess[(a, b)] = d;
                                jet.hess[(b, a)] = d;
                            }
                            let t = v.eps.eps.eps;
                            for (a, b, c) in [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)] {
                                jet.third[(a, b, c)] = t;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One-dimensional central stencil for derivative count `c` as
/// (offset, weight) pairs; the estimate is divided by `h^c`.
fn stencil_1d(c: usize) -> &'static [(i32, f64)] {
    match c {
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        _ => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    }
}

/// Richardson table over step halvings; `est(t)` evaluates a central
/// stencil at steps scaled by `t`, whose error expands in even powers of t.
fn richardson(levels: u32, mut est: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let mut prev: Vec<Vec<f64>> =
        (0..levels).map(|lev| est(0.5f64.powi(lev as i32))).collect::<Result<_>>()?;
    for m in 1..levels as usize {
        let w = 4f64.powi(m as i32);
        prev = prev
            .windows(2)
            .map(|p| p[0].iter().zip(&p[1]).map(|(&coarse, &fine)| (w * fine - coarse) / (w - 1.0)).collect())
            .collect();
    }
    Ok(prev.swap_remove(0))
}

fn fd_step(cfg: &DiffConfig, coord: f64, order: usize) -> f64 {
    cfg.fd_step_scale * coord.abs().max(1.0) * f64::EPSILON.powf(1.0 / (order as f64 + 2.0))
}

/// Mixed central difference for the multi-index `axes` (sorted, length 1..=3).
fn mixed_central<F: FiberField>(
    f: &F,
    y: &[f64],
    axes: &[usize],
    cfg: &DiffConfig,
) -> Result<Vec<f64>> {
    let order = axes.len();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &a in axes {
        match counts.last_mut() {
            Some((ax, c)) if *ax == a => *c += 1,
            _ => counts.push((a, 1)),
        }
    }
    let base: Vec<f64> = counts.iter().map(|&(a, _)| fd_step(cfg, y[a], order)).collect();

    richardson(cfg.richardson_levels, |t| {
        let steps: Vec<f64> = base.iter().map(|h| h * t).collect();
        let mut acc: Option<Vec<f64>> = None;
        let mut combo = vec![0usize; counts.len()];
        loop {
            let mut point = y.to_vec();
            let mut weight = 1.0;
            for (slot, &(axis, c)) in counts.iter().enumerate() {
                let (off, w) = stencil_1d(c)[combo[slot]];
                point[axis] += off as f64 * steps[slot];
                weight *= w;
            }
            let vals = f.eval(&point)?;
            check_finite(&vals)?;
            let acc = acc.get_or_insert_with(|| vec![0.0; vals.len()]);
            for (a, v) in acc.iter_mut().zip(&vals) {
                *a += weight * v;
            }
            // odometer over the tensor-product stencil
            let mut slot = 0;
            loop {
                if slot == combo.len() {
                    let divisor: f64 =
                        counts.iter().zip(&steps).map(|(&(_, c), h)| h.powi(c as i32)).product();
                    return Ok(acc.iter().map(|a| a / divisor).collect());
                }
                combo[slot] += 1;
                if combo[slot] < stencil_1d(counts[slot].1).len() {
                    break;
                }
                combo[slot] = 0;
                slot += 1;
            }
        }
    })
}

fn central<F: FiberField>(f: &F, y: &[f64], order: u8, cfg: &DiffConfig) -> Result<Vec<Jet3>> {
    let n = y.len();
    let value = f.eval(y)?;
    check_finite(&value)?;
    let mut out: Vec<Jet3> = value
        .iter()
        .map(|&v| Jet3 { value: v, ..Jet3::zeros(n, order) })
        .collect();

    for j in 0..n {
        let d = mixed_central(f, y, &[j], cfg)?;
        for (jet, v) in out.iter_mut().zip(d) {
            jet.grad[j] = v;
        }
    }
    if order >= 2 {
        for j in 0..n {
            for k in j..n {
                let d = mixed_central(f, y, &[j, k], cfg)?;
                for (jet, v) in out.iter_mut().zip(d) {
                    jet.hess[(j, k)] = v;
                    jet.hess[(k, j)] = v;
                }
            }
        }
    }
    if order >= 3 {
        for j in 0..n {
            for k in j..n {
                for l in k..n {
                    let d = mixed_central(f, y, &[j, k, l], cfg)?;
                    for (jet, v) in out.iter_mut().zip(d) {
                        for (a, b, c) in [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)] {
                            jet.third[(a, b, c)] = v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// First x-derivatives of a flattened field by Richardson-extrapolated
/// central differences. Returns `d[k][c] = ∂ f_c / ∂x^k`.
///
/// Fields of x are plain `f64` closures, so `cfg.method` is not consulted;
/// only the step scale and Richardson depth apply.
pub fn derive_x<F>(f: F, x: &[f64], cfg: &DiffConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    (0..x.len())
        .map(|k| {
            let h0 = fd_step(cfg, x[k], 1);
            richardson(cfg.richardson_levels, |t| {
                let h = h0 * t;
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                let fp = f(&xp)?;
                let fm = f(&xm)?;
                check_finite(&fp)?;
                check_finite(&fm)?;
                Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h)).collect())
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Real;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Cubic with all monomials up to degree three in three variables.
    struct Cubic {
        c: Vec<f64>,
    }

    impl Cubic {
        // Closed-form derivatives, written out independently of any engine.
        fn exact(&self, y: &[f64]) -> (f64, Vec<f64>, Matrix<f64>, Tensor3<f64>) {
            let c = &self.c;
            let (a, b, z) = (y[0], y[1], y[2]);
            let v = c[0] * a * a * a + c[1] * a * b * z + c[2] * b * b * z + c[3] * z * z + c[4] * a + c[5];
            let g = vec![
                3.0 * c[0] * a * a + c[1] * b * z + c[4],
                c[1] * a * z + 2.0 * c[2] * b * z,
                c[1] * a * b + c[2] * b * b + 2.0 * c[3] * z,
            ];
            let h = Matrix::from_rows(&[
                vec![6.0 * c[0] * a, c[1] * z, c[1] * b],
                vec![c[1] * z, 2.0 * c[2] * z, c[1] * a + 2.0 * c[2] * b],
                vec![c[1] * b, c[1] * a + 2.0 * c[2] * b, 2.0 * c[3]],
            ])
            .unwrap();
            let t = Tensor3::from_fn(3, |i, j, k| {
                let mut s = [i, j, k];
                s.sort();
                match s {
                    [0, 0, 0] => 6.0 * c[0],
                    [0, 1, 2] => c[1],
                    [1, 1, 2] => 2.0 * c[2],
                    _ => 0.0,
                }
            });
            (v, g, h, t)
        }
    }

    impl FiberScalar for Cubic {
        fn eval<T: Real>(&self, y: &[T]) -> Result<T> {
            let c: Vec<T> = self.c.iter().map(|&v| T::from_f64(v)).collect();
            let (a, b, z) = (y[0], y[1], y[2]);
            Ok(c[0] * a * a * a + c[1] * a * b * z + c[2] * b * b * z + c[3] * z * z + c[4] * a + c[5])
        }
    }

    struct Linear(Vec<f64>);

    impl FiberScalar for Linear {
        fn eval<T: Real>(&self, y: &[T]) -> Result<T> {
            Ok(y.iter().zip(&self.0).fold(T::zero(), |acc, (&yi, &bi)| acc + yi * T::from_f64(bi)))
        }
    }

    struct Smooth;

    impl FiberField for Smooth {
        fn eval<T: Real>(&self, y: &[T]) -> Result<Vec<T>> {
            let r2 = y[0] * y[0] + y[1] * y[1] + T::from_f64(0.5);
            Ok(vec![r2.sqrt() * (y[1] * T::from_f64(0.3)).exp(), (y[0] / r2).atan()])
        }
    }

    fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * scale.max(1e-12)
    }

    fn check_jet(j: &Jet3, v: f64, g: &[f64], h: &Matrix<f64>, t: &Tensor3<f64>, tol: f64) {
        let scale = v.abs().max(crate::tensor::max_abs(g)).max(h.max_abs()).max(t.max_abs());
        assert!(close(j.value, v, scale, tol));
        for i in 0..g.len() {
            assert!(close(j.grad[i], g[i], scale, tol), "grad {i}: {} vs {}", j.grad[i], g[i]);
        }
        assert!(crate::tensor::max_abs_diff(j.hess.as_slice(), h.as_slice()) <= tol * scale);
        if j.order >= 3 {
            assert!(
                crate::tensor::max_abs_diff(j.third.as_slice(), t.as_slice()) <= tol * scale,
                "third: {:?}",
                j.third
            );
        }
    }

    #[test]
    fn linear_form_has_zero_hessian() {
        let f = Linear(vec![0.3, -1.2, 0.5]);
        let y = [0.7, 0.2, -1.1];
        for cfg in [DiffConfig::jets(), DiffConfig::central_fd(2)] {
            let j = derive_y(&f, &y, 2, &cfg).unwrap();
            assert!(j.hess.max_abs() < 1e-9);
            for i in 0..3 {
                assert_relative_eq!(j.grad[i], f.0[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn jets_exact_on_cubic() {
        let f = Cubic { c: vec![0.7, -1.3, 2.1, 0.4, -0.9, 1.5] };
        let y = [0.3, -1.7, 2.4];
        let (v, g, h, t) = f.exact(&y);
        let j = derive_y(&f, &y, 3, &DiffConfig::jets()).unwrap();
        check_jet(&j, v, &g, &h, &t, 1e-14);
    }

    #[test]
    fn fd_and_jets_agree_on_smooth_field() {
        let y = [0.8, -0.4];
        let a = derive_y_field(&Smooth, &y, 3, &DiffConfig::jets()).unwrap();
        let b = derive_y_field(&Smooth, &y, 3, &DiffConfig::central_fd(3)).unwrap();
        for (ja, jb) in a.iter().zip(&b) {
            let scale = ja.third.max_abs().max(ja.hess.max_abs()).max(crate::tensor::max_abs(&ja.grad));
            assert!(crate::tensor::max_abs_diff(&ja.grad, &jb.grad) < 1e-6 * scale);
            assert!(crate::tensor::max_abs_diff(ja.hess.as_slice(), jb.hess.as_slice()) < 1e-6 * scale);
            assert!(crate::tensor::max_abs_diff(ja.third.as_slice(), jb.third.as_slice()) < 1e-4 * scale);
        }
    }

    #[test]
    fn non_finite_value_is_domain_error() {
        struct Pole;
        impl FiberScalar for Pole {
            fn eval<T: Real>(&self, y: &[T]) -> Result<T> {
                Ok(T::one() / y[0])
            }
        }
        for cfg in [DiffConfig::jets(), DiffConfig::central_fd(1)] {
            let e = derive_y(&Pole, &[0.0, 1.0], 1, &cfg).unwrap_err();
            assert!(matches!(e, Error::Domain(_)));
        }
    }

    #[test]
    fn rejects_bad_config_and_order() {
        let f = Linear(vec![1.0]);
        let bad = DiffConfig { richardson_levels: 5, ..DiffConfig::central_fd(1) };
        assert!(derive_y(&f, &[1.0], 1, &bad).is_err());
        assert!(derive_y(&f, &[1.0], 1, &DiffConfig::jets().with_step_scale(0.0)).is_err());
        assert!(derive_y(&f, &[1.0], 4, &DiffConfig::jets()).is_err());
    }

    #[test]
    fn derive_x_of_trig_field() {
        let f = |x: &[f64]| Ok(vec![x[0].sin() * x[1], x[1] * x[1]]);
        let d = derive_x(f, &[0.4, 1.3], &DiffConfig::default()).unwrap();
        assert_relative_eq!(d[0][0], 0.4f64.cos() * 1.3, epsilon = 1e-11);
        assert_relative_eq!(d[1][0], 0.4f64.sin(), epsilon = 1e-11);
        assert_relative_eq!(d[0][1], 0.0, epsilon = 1e-11);
        assert_relative_eq!(d[1][1], 2.6, epsilon = 1e-11);
    }

    proptest! {
        // Cubics are reproduced exactly by the extrapolated central stencils.
        // The enlarged step scale keeps rounding below the 1e-10 bar; with no
        // truncation error on cubics a large step costs nothing.
        #[test]
        fn central_fd_exact_on_cubics(
            c in proptest::collection::vec(-2.0f64..2.0, 6),
            y in proptest::collection::vec(-3.0f64..3.0, 3),
            levels in 2u32..=4,
        ) {
            let f = Cubic { c };
            let (v, g, h, t) = f.exact(&y);
            let cfg = DiffConfig::central_fd(levels).with_step_scale(1000.0);
            let j = derive_y(&f, &y, 3, &cfg).unwrap();
            let scale = v.abs().max(crate::tensor::max_abs(&g)).max(h.max_abs()).max(t.max_abs()).max(1.0);
            prop_assert!(crate::tensor::max_abs_diff(&j.grad, &g) <= 1e-10 * scale);
            prop_assert!(crate::tensor::max_abs_diff(j.hess.as_slice(), h.as_slice()) <= 1e-10 * scale);
            prop_assert!(crate::tensor::max_abs_diff(j.third.as_slice(), t.as_slice()) <= 1e-10 * scale);
        }

        #[test]
        fn jets_are_symmetric(y in proptest::collection::vec(-2.0f64..2.0, 2)) {
            let jets = derive_y_field(&Smooth, &y, 3, &DiffConfig::jets()).unwrap();
            for j in jets {
                for a in 0..2 { for b in 0..2 {
                    prop_assert_eq!(j.hess[(a, b)], j.hess[(b, a)]);
                    for c in 0..2 {
                        prop_assert_eq!(j.third[(a, b, c)], j.third[(c, a, b)]);
                        prop_assert_eq!(j.third[(a, b, c)], j.third[(b, a, c)]);
                    }
                }}
            }
        }
    }
}
