//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point field the spectral routines are generic over (`f32`, `f64`).
///
/// Exact arithmetic (rationals, integers) is supported where no square roots
/// or eigensolves are involved: see [`crate::topology::QuadratureScheme::weight`]
/// and [`crate::laplacian::assemble_dirichlet_laplacian`].
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot represent it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in target scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in target scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `base^exp` for small non-negative integers, exact in `u64`.
pub(crate) fn ipow(base: u64, exp: usize) -> u64 {
    (0..exp).fold(1u64, |acc, _| acc * base)
}
