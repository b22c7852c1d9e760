use crate::error::{Error, Result};
use crate::scalar::{Scalar, THERMAL_NOISE_DBM_PER_HZ};

/// Urban-macro pathloss in dB.
///
/// LOS: `28 + 22 log10(d) + 20 log10(f)`;
/// NLOS: `max(LOS, 13.54 + 39.08 log10(d) + 20 log10(f))` with `d` the 2D
/// distance in metres and `f` in GHz.
pub fn pathloss_db<T: Scalar>(freq_ghz: T, distance_m: T, los: bool) -> Result<T> {
    if !(distance_m > T::zero()) || !distance_m.is_finite() {
        return Err(Error::config(format!("pathloss distance must be > 0, got {distance_m}")));
    }
    if !(freq_ghz >= T::lit(0.5) && freq_ghz <= T::lit(100.0)) {
        return Err(Error::config(format!("pathloss frequency {freq_ghz} GHz outside [0.5, 100]")));
    }
    let log_d = distance_m.log10();
    let log_f = freq_ghz.log10();
    let los_pl = T::lit(28.0) + T::lit(22.0) * log_d + T::lit(20.0) * log_f;
    if los {
        return Ok(los_pl);
    }
    let nlos_pl = T::lit(13.54) + T::lit(39.08) * log_d + T::lit(20.0) * log_f;
    Ok(nlos_pl.max(los_pl))
}

/// LOS probability for an urban macro link at 2D distance `d` (UE height term dropped).
pub fn los_probability<T: Scalar>(distance_m: T) -> T {
    let d = distance_m.max(T::lit(1e-3));
    let e = (-d / T::lit(63.0)).exp();
    (T::lit(18.0) / d).min(T::one()) * (T::one() - e) + e
}

/// Array gain of a BS/UE pair of uniform arrays.
pub fn beamforming_gain_db<T: Scalar>(bs_elements: u32, ue_elements: u32) -> T {
    let ten = T::lit(10.0);
    ten * T::lit(bs_elements.max(1) as f64).log10() + ten * T::lit(ue_elements.max(1) as f64).log10()
}

/// kTB in dBm for the given bandwidth.
pub fn thermal_noise_dbm<T: Scalar>(bandwidth_hz: T) -> T {
    T::lit(THERMAL_NOISE_DBM_PER_HZ) + T::lit(10.0) * bandwidth_hz.log10()
}
