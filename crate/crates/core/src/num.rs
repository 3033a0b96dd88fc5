//! Scalar abstraction: the whole library is generic over the real scalar
//! type (`f32` or `f64`); concrete aliases live at the crate root.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar type the delay-Doppler math runs on.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Copy
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// One sample from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Lossless at the grid sizes this library targets (MN ≤ a few thousand).
pub(crate) fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

pub(crate) fn from_i64<T: Scalar>(n: i64) -> T {
    T::from_i64(n).expect("i64 representable in scalar type")
}

/// e^{jθ}
pub(crate) fn cis<T: Scalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Table of the MN-th roots of unity: `root_table(n)[r] = e^{j2πr/n}`.
///
/// Twisted-convolution and ambiguity sums index this table with exponents
/// reduced mod n, which keeps repeated phase evaluation exact and cheap.
pub(crate) fn root_table<T: Scalar>(n: usize) -> Vec<Complex<T>> {
    let step = T::TAU() / from_usize::<T>(n);
    (0..n).map(|r| cis(step * from_usize(r))).collect()
}
