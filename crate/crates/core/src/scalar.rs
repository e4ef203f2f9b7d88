//! Scalar abstraction: every numeric routine in this crate is generic over a
//! real floating-point type so the whole pipeline can run in `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the simulator, optimizers, and metrics are generic over.
pub trait Scalar:
    Float + FloatConst + NumAssign + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// All random draws and literal constants go through `f64` first so that a
/// run is driven by the same number stream regardless of the scalar type.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must convert into the scalar type")
}
