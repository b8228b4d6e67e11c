//! The associated Riemannian space: metric, unit one-form, Levi-Civita
//! data and the per-(x, y) algebraic frame.

mod connection;
pub mod fixtures;
mod frame;
mod space;
mod spec;

pub use connection::Connection;
pub use fixtures::{make_warped_space, WarpProfile};
pub use frame::{Frame, Q_MIN_REL};
pub use space::{BackgroundSpace, PointGeometry, UNIT_NORM_TOL};
pub use spec::{default_alphas, BackgroundKind, BackgroundSpec, WarpSpec};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::DiffConfig;
    use crate::real::dot;
    use crate::tensor::{max_abs, max_abs_diff, Matrix};

    const X: [f64; 3] = [0.35, -0.6, 0.8];

    #[test]
    fn euclidean_connection_vanishes() {
        let c = fixtures::euclidean(3).unwrap().connection_at(&X, &DiffConfig::default()).unwrap();
        assert_eq!(c.christoffel.max_abs(), 0.0);
        assert_eq!(c.nabla_b.max_abs(), 0.0);
        assert_eq!(c.f_form.max_abs(), 0.0);
    }

    /// Christoffel symbols of dt² + σ² Σ dx², written out by hand.
    fn warped_christoffel(sigma: f64, dsigma: f64, n: usize) -> crate::tensor::Tensor3<f64> {
        crate::tensor::Tensor3::from_fn(n, |k, i, j| {
            if k == 0 && i == j && i > 0 {
                -sigma * dsigma
            } else if k > 0 && ((i == 0 && j == k) || (j == 0 && i == k)) {
                dsigma / sigma
            } else {
                0.0
            }
        })
    }

    #[test]
    fn warped_connection_matches_hand_christoffels() {
        let p = WarpProfile::exponential(0.5);
        let s = make_warped_space(3, &p).unwrap();
        let c = s.connection_at(&X, &DiffConfig::default()).unwrap();
        let expect = warped_christoffel(p.sigma(X[0]), p.sigma_prime(X[0]), 3);
        assert!(max_abs_diff(c.christoffel.as_slice(), expect.as_slice()) < 1e-14);
    }

    #[test]
    fn warped_family_is_concircular() {
        for kappa in [0.5, 2.0] {
            let p = WarpProfile::exponential(kappa);
            let s = make_warped_space(3, &p).unwrap();
            // fd christoffels, independent of the analytic derivative tables
            let c = s.without_analytic_dx().connection_at(&X, &DiffConfig::default()).unwrap();
            let g = s.geometry_at(&X).unwrap();
            let k = p.k(X[0]);
            assert!((k + kappa).abs() < 1e-15);
            let r = Matrix::from_fn(3, |i, j| k * (g.a[(i, j)] - g.b_dn[i] * g.b_dn[j]));
            assert!(max_abs_diff(c.nabla_b.as_slice(), r.as_slice()) < 1e-10);
            let (fit, res) = c.concircular_fit(&g);
            assert!((fit - k).abs() < 1e-10 && res < 1e-10);
        }
    }

    #[test]
    fn constant_sigma_is_flat_product() {
        let s = make_warped_space(2, &WarpProfile::constant()).unwrap();
        let c = s.connection_at(&[0.1, 0.2], &DiffConfig::default()).unwrap();
        assert_eq!(c.nabla_b.max_abs(), 0.0);
        assert_eq!(c.christoffel.max_abs(), 0.0);
    }

    #[test]
    fn connection_invariants_on_every_fixture() {
        let cfg = DiffConfig::default();
        for s in [
            make_warped_space(3, &WarpProfile::linear(0.4)).unwrap(),
            fixtures::perturbed_euclidean(3, 0.3).unwrap(),
            fixtures::anisotropic_warped(3, vec![0.4, -0.3], 0.2).unwrap(),
            fixtures::tabulated_example(3),
        ] {
            let g = s.geometry_at(&X).unwrap();
            let c = s.connection_at(&X, &cfg).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        assert!((c.christoffel[(k, i, j)] - c.christoffel[(k, j, i)]).abs() < 1e-12);
                    }
                }
                // b^j ∇_i b_j = 0
                let row: Vec<f64> = (0..3).map(|j| c.nabla_b[(i, j)]).collect();
                assert!(dot(&row, &g.b_up).abs() < 1e-10, "{}", s.label());
            }
            // f_mn = ∇_m b_n − ∇_n b_m
            let alt = Matrix::from_fn(3, |m, n| c.nabla_b[(m, n)] - c.nabla_b[(n, m)]);
            assert!(max_abs_diff(alt.as_slice(), c.f_form.as_slice()) < 1e-12);
            assert!(max_abs_diff(c.f_form.as_slice(), c.f_form.transpose().map(|v| -v).as_slice()) == 0.0);
            if s.has_analytic_dx() {
                let fd = s.without_analytic_dx().connection_at(&X, &cfg).unwrap();
                assert!(max_abs_diff(fd.christoffel.as_slice(), c.christoffel.as_slice()) < 1e-8);
                assert!(max_abs_diff(fd.nabla_b.as_slice(), c.nabla_b.as_slice()) < 1e-8);
            }
        }
    }

    #[test]
    fn fixture_symmetry_classes() {
        let cfg = DiffConfig::default();
        let sym = fixtures::anisotropic_warped(3, vec![0.4, -0.3], 0.2).unwrap();
        let c = sym.connection_at(&X, &cfg).unwrap();
        assert!(c.nabla_b_asymmetry() < 1e-14);
        assert!(c.concircular_fit(&sym.geometry_at(&X).unwrap()).1 > 1e-2);
        let pert = fixtures::perturbed_euclidean(3, 0.3).unwrap();
        let c = pert.connection_at(&X, &cfg).unwrap();
        assert!(c.nabla_b_asymmetry() > 1e-2);
        assert!(max_abs(c.f_form.as_slice()) > 1e-2);
    }
}
