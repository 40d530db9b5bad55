use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

use crate::graph::Weight;

/// Floating-point scalar used by all geometric code.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Weight {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Weight {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Tolerance for manifold membership checks: 1e-9 for `f64`, scaled up to
/// what the precision of `T` can carry otherwise.
pub fn membership_tol<T: Real>() -> T {
    let floor = T::default_epsilon() * lit(1.0e4);
    RealField::max(lit(1.0e-9), floor)
}
