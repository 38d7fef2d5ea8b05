//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Real element type of matrices and vectors.
///
/// Implemented for `f32` and `f64`. Fixture files print values with
/// `Display` and read them back with `FromStr`, which round-trips exactly for
/// both primitive float types.
pub trait Scalar:
    Float
    + FromPrimitive
    + Sum
    + AddAssign
    + Debug
    + Display
    + FromStr<Err: Display>
    + Send
    + Sync
    + 'static
{
    /// Raw IEEE-754 bit pattern, widened to 64 bits.
    fn bit_pattern(self) -> u64;
}

impl Scalar for f64 {
    #[inline]
    fn bit_pattern(self) -> u64 {
        self.to_bits()
    }
}

impl Scalar for f32 {
    #[inline]
    fn bit_pattern(self) -> u64 {
        u64::from(self.to_bits())
    }
}

/// True when both slices have the same length and bit-identical elements.
pub fn bitwise_eq<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.bit_pattern() == y.bit_pattern())
}
