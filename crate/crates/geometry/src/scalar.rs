use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the geometry is generic over (f32 or f64).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Scales a tolerance calibrated for f64 to this precision.
    fn tol(base: f64) -> Self {
        let ratio = Self::epsilon().f64() / f64::EPSILON;
        Self::c(base * ratio.sqrt().max(1.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
