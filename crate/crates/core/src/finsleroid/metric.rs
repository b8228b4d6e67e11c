//! The Finsleroid metric function `K` and the tensors it induces.
//!
//! Everything here is a closed form in the frame variables `(b, q, v, u)`;
//! the primary tensor formulas use the `v`-variables, and the equivalent
//! `u`-variable forms are kept alongside as independent cross-checks.

use crate::background::{Frame, PointGeometry};
use crate::error::{Error, Result};
use crate::numkit::{det_spd, FiberScalar};
use crate::real::Real;
use crate::tensor::Matrix;

use super::charge::Charge;

/// Scalars of the metric function at one `(x, y)`.
#[derive(Clone, Copy, Debug)]
pub struct KEval<T> {
    pub k: T,
    /// characteristic quadratic form `B = b² + gqb + q²`
    pub b_form: T,
    pub phi: T,
    /// `J = e^{GΦ/2}`
    pub j: T,
    /// `L = q + (g/2) b`
    pub l: T,
}

/// The angle Φ as a function of `L` and `h·b`.
///
/// For `L > 0` both branches collapse to `arctan(G/2) + arctan(hb/L)`, which
/// is smooth through `b = 0`; for `L ≤ 0` (then necessarily `b ≠ 0`) the
/// branch is picked by the sign of `b`.
pub fn phi_angle<T: Real>(charge: &Charge, l: T, hb: T) -> T {
    let base = T::from_f64(charge.phi_at_equator());
    let half_pi = T::pi() / T::from_f64(2.0);
    if l.primal() > 0.0 {
        base + (hb / l).atan()
    } else if hb.primal() > 0.0 {
        half_pi + base - (l / hb).atan()
    } else if hb.primal() < 0.0 {
        -half_pi + base - (l / hb).atan()
    } else {
        base
    }
}

pub fn evaluate_k<T: Real>(charge: &Charge, frame: &Frame<T>) -> Result<KEval<T>> {
    if !(frame.s.primal() > 0.0) {
        return Err(Error::Domain("metric function requested at y = 0".into()));
    }
    let g = T::from_f64(charge.g);
    let (b, q) = (frame.b, frame.q);
    let b_form = b * b + g * q * b + q * q;
    let l = q + T::from_f64(0.5 * charge.g) * b;
    let phi = phi_angle(charge, l, T::from_f64(charge.h) * b);
    let j = (T::from_f64(0.5 * charge.big_g) * phi).exp();
    Ok(KEval { k: b_form.sqrt() * j, b_form, phi, j, l })
}

/// `y_i = (v_i + (b + gq) b_i) K²/B`
pub fn lower_y<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Vec<T> {
    let g = T::from_f64(charge.g);
    let c = frame.b + g * frame.q;
    let f = k * k / b_form;
    frame.v_dn.iter().zip(&frame.b_dn).map(|(&v, &bi)| (v + c * bi) * f).collect()
}

/// `y_i = (a_ij y^j + gq b_i) K²/B`
pub fn lower_y_u_form<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Vec<T> {
    let gq = T::from_f64(charge.g) * frame.q;
    let f = k * k / b_form;
    frame.u.iter().zip(&frame.b_dn).map(|(&u, &bi)| (u + gq * bi) * f).collect()
}

/// Metric tensor `g_ij` and the determinant ratio `det(g_ij)/det(a_ij)`.
pub fn metric_tensor<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Result<(Matrix<T>, T)> {
    frame.require_off_axis()?;
    let g = T::from_f64(charge.g);
    let (b, q) = (frame.b, frame.q);
    let (bd, vd) = (&frame.b_dn, &frame.v_dn);
    let gb = g / b_form;
    let bb = q * (b + g * q);
    let scale = k * k / b_form;
    let g_dn = Matrix::from_fn(frame.dim(), |i, j| {
        let corr = bb * bd[i] * bd[j] + q * (bd[i] * vd[j] + bd[j] * vd[i]) - b * vd[i] * vd[j] / q;
        (frame.a[(i, j)] + gb * corr) * scale
    });
    let det_ratio = det_spd(&g_dn)? / det_spd(&frame.a)?;
    Ok((g_dn, det_ratio))
}

/// `g_ij` from the `u`-variable representation.
pub fn metric_tensor_u_form<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Result<Matrix<T>> {
    frame.require_off_axis()?;
    let g = T::from_f64(charge.g);
    let (b, q) = (frame.b, frame.q);
    let s2 = frame.s * frame.s;
    let (bd, u) = (&frame.b_dn, &frame.u);
    let gb = g / b_form;
    let bb = g * q * q - b * s2 / q;
    let scale = k * k / b_form;
    Ok(Matrix::from_fn(frame.dim(), |i, j| {
        let corr = bb * bd[i] * bd[j] - b / q * u[i] * u[j] + s2 / q * (bd[i] * u[j] + bd[j] * u[i]);
        (frame.a[(i, j)] + gb * corr) * scale
    }))
}

/// Reciprocal tensor `g^ij`.
pub fn inverse_metric<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Result<Matrix<T>> {
    frame.require_off_axis()?;
    let g = T::from_f64(charge.g);
    let (b, q) = (frame.b, frame.q);
    let (bu, vu) = (&frame.b_up, &frame.v_up);
    let gb = g / b_form;
    let vv = (b + g * q) / q;
    let scale = b_form / (k * k);
    Ok(Matrix::from_fn(frame.dim(), |i, j| {
        let corr = -b * q * bu[i] * bu[j] - q * (bu[i] * vu[j] + bu[j] * vu[i]) + vv * vu[i] * vu[j];
        (frame.a_inv[(i, j)] + gb * corr) * scale
    }))
}

/// `g^ij` from the `y`-variable representation.
pub fn inverse_metric_u_form<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Result<Matrix<T>> {
    frame.require_off_axis()?;
    let g = T::from_f64(charge.g);
    let (b, q) = (frame.b, frame.q);
    let (bu, y) = (&frame.b_up, &frame.y);
    let gq = g / q;
    let yy = g * (b + g * q) / (b_form * q);
    let scale = b_form / (k * k);
    Ok(Matrix::from_fn(frame.dim(), |i, j| {
        let corr = gq * (b * bu[i] * bu[j] - bu[i] * y[j] - bu[j] * y[i]) + yy * y[i] * y[j];
        (frame.a_inv[(i, j)] + corr) * scale
    }))
}

/// Contracted Cartan tensor `A_i = (NK/2) g (q² b_i − b v_i)/(qB)`.
pub fn cartan_trace<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, b_form: T) -> Result<Vec<T>> {
    frame.require_off_axis()?;
    let n = T::from_f64(frame.dim() as f64);
    let q = frame.q;
    let f = n * k / T::from_f64(2.0) * T::from_f64(charge.g) / (q * b_form);
    Ok(frame.b_dn.iter().zip(&frame.v_dn).map(|(&bi, &vi)| f * (q * q * bi - frame.b * vi)).collect())
}

/// `A_i = (NK/2) g (1/q)(b_i − (b/K²) y_i)`, from the covector `y_i`.
pub fn cartan_trace_y_form<T: Real>(charge: &Charge, frame: &Frame<T>, k: T, y_dn: &[T]) -> Result<Vec<T>> {
    frame.require_off_axis()?;
    let n = T::from_f64(frame.dim() as f64);
    let f = n * k / T::from_f64(2.0) * T::from_f64(charge.g) / frame.q;
    let bk = frame.b / (k * k);
    Ok(frame.b_dn.iter().zip(y_dn).map(|(&bi, &yi)| f * (bi - bk * yi)).collect())
}

/// `(H_mn, H^i_k) = (η_mn K²/B, η^i_k)`; the mixed tensor is indexed `(i, k)`.
pub fn h_tensors<T: Real>(frame: &Frame<T>, k: T, b_form: T) -> Result<(Matrix<T>, Matrix<T>)> {
    let scale = k * k / b_form;
    let h_dn = frame.eta_dn()?.map(|v| v * scale);
    Ok((h_dn, frame.eta_mixed()?))
}

/// Everything the metric function induces at one `(x, y)`.
#[derive(Clone, Debug)]
pub struct MetricEval<T> {
    pub k: T,
    pub b_form: T,
    pub phi: T,
    pub j: T,
    pub l: T,
    pub y_dn: Vec<T>,
    pub g_dn: Matrix<T>,
    pub g_up: Matrix<T>,
    pub det_ratio: T,
    pub a_dn: Vec<T>,
    pub h_dn: Matrix<T>,
    pub h_mixed: Matrix<T>,
}

impl<T: Real> MetricEval<T> {
    /// Membership of y in the Finsleroid `K ≤ 1`.
    pub fn in_finsleroid(&self) -> bool {
        self.k.primal() <= 1.0
    }

    /// `A^i = g^ij A_j`
    pub fn a_up(&self) -> Vec<T> {
        self.g_up.mul_vec(&self.a_dn)
    }
}

pub fn metric_eval<T: Real>(charge: &Charge, frame: &Frame<T>) -> Result<MetricEval<T>> {
    let ke = evaluate_k(charge, frame)?;
    let (k, bf) = (ke.k, ke.b_form);
    let (g_dn, det_ratio) = metric_tensor(charge, frame, k, bf)?;
    let (h_dn, h_mixed) = h_tensors(frame, k, bf)?;
    Ok(MetricEval {
        k,
        b_form: bf,
        phi: ke.phi,
        j: ke.j,
        l: ke.l,
        y_dn: lower_y(charge, frame, k, bf),
        g_dn,
        g_up: inverse_metric(charge, frame, k, bf)?,
        det_ratio,
        a_dn: cartan_trace(charge, frame, k, bf)?,
        h_dn,
        h_mixed,
    })
}

/// `K²` as a function on the tangent fiber at a fixed point.
#[derive(Clone, Copy, Debug)]
pub struct KSquared<'a> {
    pub charge: Charge,
    pub geom: &'a PointGeometry,
}

impl FiberScalar for KSquared<'_> {
    fn eval<T: Real>(&self, y: &[T]) -> Result<T> {
        let k = evaluate_k(&self.charge, &Frame::new(self.geom, y)?)?.k;
        Ok(k * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::fixtures;
    use crate::numkit::{derive_y, invert_spd, DiffConfig};
    use crate::real::dot;
    use crate::tensor::{max_abs, max_abs_diff, rel_diff};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const X: [f64; 3] = [0.2, -0.4, 0.3];

    fn geom3() -> PointGeometry {
        fixtures::tabulated_example(3).geometry_at(&X).unwrap()
    }

    /// The literal two-branch definition, for comparison with [`phi_angle`].
    fn phi_branchwise(c: &Charge, l: f64, hb: f64) -> f64 {
        let base = c.phi_at_equator();
        let half_pi = std::f64::consts::FRAC_PI_2;
        if hb > 0.0 {
            half_pi + base - (l / hb).atan()
        } else if hb < 0.0 {
            -half_pi + base - (l / hb).atan()
        } else {
            base
        }
    }

    #[test]
    fn construction_point_value() {
        // g = 1, b = 1, q = 1 on the flat plane with b = e_0
        let c = Charge::new(1.0).unwrap();
        let geom = fixtures::euclidean(2).unwrap().geometry_at(&[0.0, 0.0]).unwrap();
        let f = Frame::new(&geom, &[1.0, 1.0]).unwrap();
        let ke = evaluate_k(&c, &f).unwrap();
        assert_relative_eq!(ke.b_form, 3.0, epsilon = 1e-15);
        assert_relative_eq!(ke.phi, std::f64::consts::FRAC_PI_3, epsilon = 1e-15);
        // high-precision reference: √3 e^{π/(3√3)}
        assert_relative_eq!(ke.k, 3.170_552_720_318_194_2, max_relative = 1e-15);
    }

    #[test]
    fn riemannian_limit() {
        let c = Charge::new(0.0).unwrap();
        let g = geom3();
        let f = Frame::new(&g, &[0.7, -1.1, 0.45]).unwrap();
        let ke = evaluate_k(&c, &f).unwrap();
        assert_relative_eq!(ke.k, f.s, max_relative = 1e-15);
        let (gd, det) = metric_tensor(&c, &f, ke.k, ke.b_form).unwrap();
        assert!(max_abs_diff(gd.as_slice(), g.a.as_slice()) < 1e-14);
        assert_relative_eq!(det, 1.0, epsilon = 1e-13);
        let gu = inverse_metric(&c, &f, ke.k, ke.b_form).unwrap();
        assert!(max_abs_diff(gu.as_slice(), g.a_inv.as_slice()) < 1e-14);
        let yd = lower_y(&c, &f, ke.k, ke.b_form);
        assert!(max_abs_diff(&yd, &f.u) < 1e-14);
        assert_eq!(max_abs(&cartan_trace(&c, &f, ke.k, ke.b_form).unwrap()), 0.0);
    }

    #[test]
    fn equator_value() {
        // y ⊥ b: both branch limits give Φ = arctan(G/2)
        let geom = fixtures::euclidean(3).unwrap().geometry_at(&[0.0; 3]).unwrap();
        for g in [-1.5, 0.3, 1.9] {
            let c = Charge::new(g).unwrap();
            let f = Frame::new(&geom, &[0.0, 0.6, -0.8]).unwrap();
            let ke = evaluate_k(&c, &f).unwrap();
            assert_eq!(ke.phi, c.phi_at_equator());
            assert_relative_eq!(ke.k, (0.5 * c.big_g * c.phi_at_equator()).exp(), max_relative = 1e-15);
        }
    }

    #[test]
    fn zero_vector_rejected() {
        let c = Charge::new(0.5).unwrap();
        let geom = geom3();
        assert!(Frame::<f64>::new(&geom, &[0.0; 3]).is_err());
        let f = Frame::new(&geom, &geom.b_up).unwrap();
        // along b: K is defined but the tensors with 1/q are refused
        let ke = evaluate_k(&c, &f).unwrap();
        assert_relative_eq!(ke.k, (0.25 * c.big_g * std::f64::consts::PI).exp(), max_relative = 1e-9);
        assert!(matches!(metric_tensor(&c, &f, ke.k, ke.b_form), Err(Error::NearCollinear { .. })));
        assert!(matches!(cartan_trace(&c, &f, ke.k, ke.b_form), Err(Error::NearCollinear { .. })));
    }

    #[test]
    fn determinant_and_inverse() {
        let c = Charge::new(1.2).unwrap();
        let g = geom3();
        let f = Frame::new(&g, &[0.3, 0.9, -0.2]).unwrap();
        let m = metric_eval(&c, &f).unwrap();
        let expect = (m.k * m.k / m.b_form).powi(3);
        assert!(((m.det_ratio - expect) / expect).abs() < 1e-9);
        let prod = m.g_up.matmul(&m.g_dn);
        assert!(max_abs_diff(prod.as_slice(), Matrix::<f64>::identity(3).as_slice()) < 1e-10);
        let numeric = invert_spd(&m.g_dn).unwrap();
        assert!(rel_diff(numeric.as_slice(), m.g_up.as_slice()) < 1e-9);
    }

    #[test]
    fn metric_oracles_against_k_squared() {
        let c = Charge::new(0.8).unwrap();
        let g = geom3();
        let y = [0.7, -1.1, 0.45];
        let f = Frame::new(&g, &y).unwrap();
        let m = metric_eval(&c, &f).unwrap();
        let jet = derive_y(&KSquared { charge: c, geom: &g }, &y, 3, &DiffConfig::jets()).unwrap();
        let half_grad: Vec<f64> = jet.grad.iter().map(|v| 0.5 * v).collect();
        assert!(rel_diff(&half_grad, &m.y_dn) < 1e-12);
        let half_hess = jet.hess.map(|v| 0.5 * v);
        assert!(rel_diff(half_hess.as_slice(), m.g_dn.as_slice()) < 1e-12);
        // A_i = K g^jk C_ijk with C_ijk = ¼ ∂³K²
        let a: Vec<f64> = (0..3)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        s += m.g_up[(j, k)] * 0.25 * jet.third[(i, j, k)];
                    }
                }
                m.k * s
            })
            .collect();
        assert!(rel_diff(&a, &m.a_dn) < 1e-10, "{a:?} vs {:?}", m.a_dn);
        // central differences as an unlike second oracle
        let fd = derive_y(&KSquared { charge: c, geom: &g }, &y, 2, &DiffConfig::central_fd(3)).unwrap();
        assert!(rel_diff(fd.hess.map(|v| 0.5 * v).as_slice(), m.g_dn.as_slice()) < 1e-7);
    }

    #[test]
    fn h_tensors_project() {
        let c = Charge::new(-1.5).unwrap();
        let g = fixtures::tabulated_example(4).geometry_at(&[0.1, 0.2, -0.3, 0.0]).unwrap();
        let f = Frame::new(&g, &[0.5, -0.4, 1.2, 0.3]).unwrap();
        let m = metric_eval(&c, &f).unwrap();
        let hh = m.h_mixed.matmul(&m.h_mixed);
        assert!(max_abs_diff(hh.as_slice(), m.h_mixed.as_slice()) < 1e-12);
        let scale = m.k * m.k / m.b_form;
        let eta = f.eta_dn().unwrap();
        assert!(max_abs_diff(m.h_dn.as_slice(), eta.map(|v| v * scale).as_slice()) < 1e-12);
    }

    #[test]
    fn generic_in_f32() {
        let c = Charge::new(1.0).unwrap();
        let geom = fixtures::euclidean(2).unwrap().geometry_at(&[0.0, 0.0]).unwrap();
        let f = Frame::new(&geom, &[1.0f32, 1.0]).unwrap();
        let k = evaluate_k(&c, &f).unwrap().k;
        assert!((k - 3.170_552_7f32).abs() < 1e-5);
    }

    fn sample() -> impl Strategy<Value = (f64, [f64; 3])> {
        (-1.95f64..1.95, proptest::array::uniform3(-2.0f64..2.0))
            .prop_filter("y away from the b axis", |(_, y)| {
                let g = geom3();
                Frame::new(&g, y).map(|f| f.q > 1e-3 * f.s).unwrap_or(false)
            })
    }

    proptest! {
        #[test]
        fn tensor_invariants((gval, y) in sample()) {
            let c = Charge::new(gval).unwrap();
            let geom = geom3();
            let f = Frame::new(&geom, &y).unwrap();
            let m = metric_eval(&c, &f).unwrap();
            let k2 = m.k * m.k;
            prop_assert!(m.b_form > 0.0);
            prop_assert!((dot(&m.y_dn, &y) - k2).abs() < 1e-12 * k2);
            prop_assert!((m.g_dn.quad(&y, &y) - k2).abs() < 1e-11 * k2);
            prop_assert!(dot(&m.a_dn, &y).abs() < 1e-12 * max_abs(&m.a_dn).max(1e-300) * max_abs(&y));
            // u-variable forms agree with the v-variable forms
            prop_assert!(rel_diff(&lower_y_u_form(&c, &f, m.k, m.b_form), &m.y_dn) < 1e-12);
            let gu = metric_tensor_u_form(&c, &f, m.k, m.b_form).unwrap();
            prop_assert!(rel_diff(gu.as_slice(), m.g_dn.as_slice()) < 1e-10);
            let giu = inverse_metric_u_form(&c, &f, m.k, m.b_form).unwrap();
            prop_assert!(rel_diff(giu.as_slice(), m.g_up.as_slice()) < 1e-10);
            let ay = cartan_trace_y_form(&c, &f, m.k, &m.y_dn).unwrap();
            prop_assert!(rel_diff(&ay, &m.a_dn) < 1e-10);
            // the smooth Φ form equals the branch definition
            let l = m.l;
            let hb = c.h * f.b;
            prop_assert!((phi_angle(&c, l, hb) - phi_branchwise(&c, l, hb)).abs() < 1e-12);
        }

        #[test]
        fn homogeneity((gval, y) in sample(), lambda in prop::sample::select(vec![0.5, 2.0, 7.0])) {
            let c = Charge::new(gval).unwrap();
            let geom = geom3();
            let m1 = metric_eval(&c, &Frame::new(&geom, &y).unwrap()).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * lambda).collect();
            let m2 = metric_eval(&c, &Frame::new(&geom, &ys).unwrap()).unwrap();
            prop_assert!((m2.k - lambda * m1.k).abs() < 1e-12 * lambda * m1.k);
            prop_assert!(rel_diff(m2.g_dn.as_slice(), m1.g_dn.as_slice()) < 1e-10);
        }
    }
}
