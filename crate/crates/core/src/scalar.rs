//! Scalar abstraction for the radio math.
//!
//! Link-budget, SINR and link-adaptation arithmetic is written once against
//! [`Scalar`] so it can be evaluated in `f32` (compact sweeps) or `f64`
//! (the simulator default).

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the channel and MAC math.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every finite `f64` is representable (possibly rounded).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Boltzmann noise floor at 290 K in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Scalar>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip_f32_and_f64() {
        for db in [-30.0, -3.0, 0.0, 17.03, 45.0] {
            let x64 = linear_to_db(db_to_linear(db));
            assert!((x64 - db).abs() < 1e-9);
            let x32 = linear_to_db(db_to_linear(db as f32));
            assert!((x32 - db as f32).abs() < 1e-4);
        }
    }
}
