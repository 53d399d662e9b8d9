//! Scalar abstraction shared by the geometry and network math.
//!
//! The math modules are generic over [`Real`] so they work for f32 and f64;
//! the shipped pipeline uses the f64 aliases exported at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar with the conversions the math code relies on.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + 'static
{
    /// Converts an f64 literal; panics only for values outside the type's range.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Lossy view as f64, for diagnostics and serialization boundaries.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar usable inside the batched network math (ndarray matrix products).
pub trait NetScalar: Real + ndarray::LinalgScalar + ndarray::ScalarOperand + std::iter::Sum {}

impl NetScalar for f32 {}
impl NetScalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_round_trips() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25_f32);
        assert_eq!(1.5_f64.as_f64(), 1.5);
    }
}
