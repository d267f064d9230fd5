//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All matrices are built over a real field `T` (and `Complex<T>` where
//! phases appear). `f64` is the working precision; `f32` is supported for
//! quick experiments and is exercised in the tests at looser tolerances.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the simulator, metrics and search code.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts `T` back to `f64` (for I/O and reporting).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}

/// `exp(-i * phase)`.
#[inline]
pub fn phase_factor<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), -phase.sin())
}

#[inline]
pub(crate) fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
