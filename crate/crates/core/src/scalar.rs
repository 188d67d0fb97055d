//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the math is written against: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold
    /// the value at all, which never happens for `f32`/`f64`.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    /// Tolerance used for sum-to-one style checks; never tighter than the
    /// type's own resolution permits.
    fn normalization_tol() -> Self {
        Self::cast(1e-10).max(Self::epsilon() * Self::cast(256.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Falling factorial `n (n-1) ... (n-order+1)` evaluated in `T`.
pub(crate) fn falling<T: Real>(n: T, order: u32) -> T {
    (0..order).fold(T::one(), |acc, i| acc * (n - T::from_count(u64::from(i))))
}

/// Rising factorial `r (r+1) ... (r+order-1)`.
pub(crate) fn rising<T: Real>(r: T, order: u32) -> T {
    (0..order).fold(T::one(), |acc, i| acc * (r + T::from_count(u64::from(i))))
}

/// `x^n` for an integer exponent that may exceed `i32`.
pub(crate) fn pow_count<T: Real>(x: T, n: u64) -> T {
    match i32::try_from(n) {
        Ok(e) => x.powi(e),
        Err(_) => x.powf(T::from_count(n)),
    }
}
