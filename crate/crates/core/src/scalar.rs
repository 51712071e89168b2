//! Real scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    'static
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
{
    /// Relative pivot threshold used by the Hermitian factorizations.
    const PIVOT_TOL: f64;
    /// Relative off-diagonal threshold at which Jacobi sweeps stop.
    const JACOBI_TOL: f64;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const PIVOT_TOL: f64 = 1e-14;
    const JACOBI_TOL: f64 = 1e-15;
}

impl Real for f32 {
    const PIVOT_TOL: f64 = 1e-6;
    const JACOBI_TOL: f64 = 1e-7;
}

/// Complex value over the scalar type `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cz<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    C::new(re, T::zero())
}
