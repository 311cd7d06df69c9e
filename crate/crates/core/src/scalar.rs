//! Scalar abstraction shared by every numerical module.
//!
//! All physics code is written against [`Real`] so that the same routines can
//! run in `f64` (the production path) or `f32` (cheap sweeps, precision
//! studies). Angular-momentum coefficients are computed exactly in rational
//! arithmetic and only converted to `Real` at the end.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real floating-point scalar usable by the solvers.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal; every supported scalar can represent it approximately.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert to the scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `exp(-i theta)`.
#[inline]
pub(crate) fn phase<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), -theta.sin())
}
