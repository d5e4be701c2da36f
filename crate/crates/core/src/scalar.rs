//! Scalar abstraction shared by every numerical module.

use std::fmt;

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

use crate::eigen::EigenScalar;

/// Real floating-point type the engine can run on.
///
/// Everything is written against this trait; `f64` is the production type and
/// the tolerances quoted throughout the crate assume it. `f32` is supported
/// for quick, low-accuracy runs.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + EigenScalar
    + Send
    + Sync
    + 'static
{
    /// Tolerance used when validating that a state vector is normalized.
    fn norm_tolerance() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn norm_tolerance() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn norm_tolerance() -> Self {
        1e-5
    }
}

pub type Cplx<T> = Complex<T>;
pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Squared Euclidean norm of a complex slice.
pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// ⟨a|b⟩ with the conjugate on the left argument.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Largest absolute deviation of `m` from being Hermitian.
pub fn hermiticity_defect<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = cabs(m[(i, j)] - m[(j, i)].conj());
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| {
        let a = cabs(*z);
        if a > acc {
            a
        } else {
            acc
        }
    })
}
