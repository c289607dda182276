//! Numeric abstraction shared by arcs, dynamics and aggregation.
//!
//! Everything up to and including displacement detection only needs field
//! operations and ordering, so it runs unchanged on exact rationals. The one
//! irrational step, the standard deviation, goes through [`Scalar::sqrt`].

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// A real-valued scalar usable for emotion scores and metrics.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Square root. Exact for floats up to rounding; for rationals exact only
    /// when the argument is the square of a rational with an f64-representable root.
    fn sqrt(self) -> Self;

    /// Converts from an f64 read from a file or flag.
    ///
    /// Panics if the value has no representation (NaN, or out of range for
    /// rationals); callers validate inputs before converting.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(|| panic!("{value} is not representable as a scalar"))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }
}

impl Scalar for f64 {
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

impl Scalar for f32 {
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
}

macro_rules! rational_scalar {
    ($($int:ty),*) => {$(
        impl Scalar for Ratio<$int> {
            fn sqrt(self) -> Self {
                if self <= Self::from_integer(0) {
                    return Self::from_integer(0);
                }
                let approx = f64::sqrt(self.to_f64().unwrap_or(0.0));
                Self::from_f64(approx).unwrap_or_else(|| Self::from_integer(0))
            }
        }
    )*};
}

rational_scalar!(i64, i128);

/// Arithmetic mean; `None` for an empty slice. A constant slice returns its
/// value unchanged rather than an accumulated approximation of it.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    let first = *values.first()?;
    if values.iter().all(|&v| v == first) {
        return Some(first);
    }
    let sum = values.iter().fold(T::zero(), |acc, &v| acc + v);
    Some(sum / T::from_count(values.len()))
}
