//! Floating-point scalar abstraction for amplitude arithmetic.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar underlying complex amplitudes and probabilities.
///
/// Implemented for `f32` and `f64`; the crate-root aliases pin `f64` for the
/// experiment layer, which needs the head room for threshold fits.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` literals and sampled values.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts into every supported scalar")
    }

    /// Conversion used when handing probabilities to the RNG layer.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar values fit in f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex amplitude over the chosen scalar.
pub type Amplitude<T> = Complex<T>;

/// `|z|^2` without the square root `Complex::norm` would take.
pub fn norm_sqr<T: Scalar>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}
