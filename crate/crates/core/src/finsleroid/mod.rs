//! Finsleroid metric function, induced tensors and generating functions.

mod charge;
mod generating;
mod metric;

pub use charge::Charge;
pub use generating::{generating_phi, generating_v, BranchSign, GeneratingPhi, GeneratingV, S_MARGIN};
pub use metric::{
    cartan_trace, cartan_trace_y_form, evaluate_k, h_tensors, inverse_metric, inverse_metric_u_form, lower_y,
    lower_y_u_form, metric_eval, metric_tensor, metric_tensor_u_form, phi_angle, KEval, KSquared, MetricEval,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{fixtures, Frame};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn generating_functions_reproduce_k(
            g in -1.95f64..1.95,
            y in proptest::array::uniform3(-3.0f64..3.0),
        ) {
            let c = Charge::new(g).unwrap();
            let geom = fixtures::tabulated_example(3).geometry_at(&[0.2, -0.4, 0.3]).unwrap();
            let f = Frame::new(&geom, &y).unwrap();
            prop_assume!(f.s > 1e-3);
            let k = evaluate_k(&c, &f).unwrap().k;
            let s = f.b / f.s;
            prop_assume!(s.abs() < 0.999);
            let p = generating_phi(&c, s).unwrap();
            prop_assert!((f.s * p.phi - k).abs() < 1e-12 * k);
            prop_assume!(f.b.abs() > 1e-3 * f.s);
            let v = generating_v(&c, f.q / f.b, BranchSign::of(f.b));
            prop_assert!((f.b.abs() * v.v - k).abs() < 1e-11 * k);
        }
    }
}
