//! Scalar abstraction shared by every numerical module.
//!
//! All physics in this crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The crate root re-exports `f64`
//! aliases for the common types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar usable by the simulator.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + rustfft::FftNum
    + 'static
{
    /// Error function.
    fn erf(self) -> Self;

    /// Converts an `f64` literal. Every literal used in this crate is
    /// representable in both supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion for diagnostics and I/O.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_matches_known_values() {
        assert!((Real::erf(0.0_f64)).abs() < 1e-15);
        assert!((Real::erf(1.0_f64) - 0.842_700_792_949_714_9).abs() < 1e-14);
        assert!((Real::erf(1.0_f32) - 0.842_700_8).abs() < 1e-6);
    }

    #[test]
    fn literal_conversion_round_trips() {
        let x: f32 = lit(2.5);
        assert_eq!(x, 2.5);
        assert_eq!(lit::<f64>(0.1).as_f64(), 0.1);
    }
}
