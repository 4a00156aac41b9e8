//! Floating-point scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point type usable by the estimators (`f32` or `f64`).
///
/// Tolerances that depend on working precision live here so that the same
/// algorithm can be instantiated at single or double precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Absolute asymmetry accepted by the symmetric eigensolver (scaled by
    /// `max(1, max|S|)`).
    const SYMMETRY_TOL: f64;
    /// Deviation from `LᵀL/p = I` accepted for an initial loading estimate.
    const SCALING_TOL: f64;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f64 {
    const SYMMETRY_TOL: f64 = 1e-10;
    const SCALING_TOL: f64 = 1e-6;
}

impl Scalar for f32 {
    const SYMMETRY_TOL: f64 = 1e-4;
    const SCALING_TOL: f64 = 1e-3;
}
