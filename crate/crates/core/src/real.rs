//! Scalar abstraction shared by every closed-form formula in the crate.
//!
//! All y-dependent formulas are written once against [`Real`] and evaluated
//! either with plain floats (`f32`, `f64`) or with nested [`Dual`](crate::Dual)
//! numbers when exact y-derivatives are wanted.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Num, NumAssignOps};

/// Real scalar usable by the closed-form formulas.
///
/// Branch decisions (signs, thresholds) are taken on [`Real::primal`], so a
/// dual number follows the same branch as its real part.
pub trait Real:
    Num + NumAssignOps + Neg<Output = Self> + Copy + Debug + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;

    /// Real part, discarding any derivative components.
    fn primal(self) -> f64;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn atan(self) -> Self;

    /// True when every component (value and derivatives) is finite.
    fn is_finite(self) -> bool;

    fn abs(self) -> Self {
        if self.primal() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self;
        }
        acc
    }

    fn pi() -> Self {
        Self::from_f64(std::f64::consts::PI)
    }
}

macro_rules! impl_real_float {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn primal(self) -> f64 {
                self as f64
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn atan(self) -> Self {
                <$t>::atan(self)
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn pi() -> Self {
                <$t as num_traits::FloatConst>::PI()
            }
        }
    };
}

impl_real_float!(f32);
impl_real_float!(f64);

/// Lift a slice of `f64` into any [`Real`].
pub fn lift<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::from_f64(x)).collect()
}

/// Real parts of a slice.
pub fn primal<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.primal()).collect()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hypot<T: Real>(a: T, b: T) -> T {
        (a * a + b * b).sqrt()
    }

    #[test]
    fn generic_over_float_widths() {
        assert_eq!(hypot(3.0f64, 4.0), 5.0);
        assert!((hypot(3.0f32, 4.0) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn abs_and_powi() {
        assert_eq!(Real::abs(-2.5f64), 2.5);
        assert_eq!(Real::powi(1.5f64, 3), 3.375);
        assert_eq!(Real::powi(7.0f64, 0), 1.0);
    }
}
