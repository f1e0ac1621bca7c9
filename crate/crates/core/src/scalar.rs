//! Scalar abstraction for the order-statistic layer.
//!
//! The trimmed functional only needs ordering, field arithmetic and a p-th
//! power, so it runs unchanged over `f32`, `f64` and exact rationals. Exact
//! rationals only support integer exponents.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Pow, Signed, ToPrimitive};

pub trait Scalar:
    Clone + PartialOrd + Debug + Send + Sync + Num + Signed + FromPrimitive + ToPrimitive + 'static
{
    /// `self^p` for `self >= 0`; `None` when the exponent is not representable.
    fn pow_p(&self, p: f64) -> Option<Self>;

    fn is_finite_scalar(&self) -> bool;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn pow_p(&self, p: f64) -> Option<Self> {
                if p == 1.0 {
                    Some(*self)
                } else if p == 2.0 {
                    Some(self * self)
                } else if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    Some(self.powi(p as i32))
                } else {
                    Some(self.powf(p as $t))
                }
            }

            #[inline]
            fn is_finite_scalar(&self) -> bool {
                self.is_finite()
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn pow_p(&self, p: f64) -> Option<Self> {
        if p.fract() != 0.0 || p < 0.0 || p > u32::MAX as f64 {
            return None;
        }
        Some(Pow::pow(self, p as u32))
    }

    fn is_finite_scalar(&self) -> bool {
        true
    }
}

/// Exact rational from a machine float (every finite float is a dyadic rational).
pub fn exact_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_f64(x)
}

/// Exact rational from an integer.
pub fn exact_from_int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}
