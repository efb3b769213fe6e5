//! Floating-point scalar abstraction the whole crate is generic over.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar type for coordinates, weights, and energies: `f32` or `f64`.
///
/// Everything numeric in this crate is generic over `Scalar`; the crate root
/// exports `f64` type aliases for the common case.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into `T`, rounding to the nearest representable
/// value. Panics only for exotic scalar types that cannot represent finite
/// `f64` values at all.
#[inline]
pub(crate) fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 constant must be representable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cast_round_trips_simple_constants() {
        assert_eq!(cast::<f64>(1.5), 1.5);
        assert_eq!(cast::<f32>(0.25), 0.25f32);
    }
}
