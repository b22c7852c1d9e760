use serde::{Deserialize, Serialize};

use super::CarrierConfig;
use crate::scalar::Scalar;
use crate::sim::RngStream;

/// Frequency-selective fading: per-subband log-normal gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingParams {
    pub enabled: bool,
    pub sigma_db: f64,
    /// Redraw period of the whole vector.
    pub period_s: f64,
    /// Exponential correlation bandwidth across subbands; `None` for i.i.d.
    pub coherence_bandwidth_mhz: Option<f64>,
}

impl Default for FadingParams {
    fn default() -> Self {
        FadingParams {
            enabled: true,
            sigma_db: 4.0,
            period_s: 10e-3,
            coherence_bandwidth_mhz: None,
        }
    }
}

/// Draws one fading vector (dB) of `carrier.n_subbands` entries.
///
/// With a coherence bandwidth `Bc` adjacent subbands follow an AR(1) chain
/// with correlation `exp(-subband_width / Bc)`; the marginal stays N(0, sigma).
pub fn resample_fading<T: Scalar>(carrier: &CarrierConfig, params: &FadingParams, rng: &mut RngStream) -> Vec<T> {
    let n = carrier.n_subbands.max(1) as usize;
    if !params.enabled || params.sigma_db == 0.0 {
        return vec![T::zero(); n];
    }
    let rho = match params.coherence_bandwidth_mhz {
        Some(bc) if bc > 0.0 => (-(carrier.bandwidth_mhz / n as f64) / bc).exp(),
        _ => 0.0,
    };
    let innovation = (1.0 - rho * rho).sqrt();
    let mut prev = 0.0;
    (0..n)
        .map(|i| {
            let z = rng.normal(0.0, params.sigma_db);
            prev = if i == 0 { z } else { rho * prev + innovation * z };
            T::lit(prev)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carrier(n: u32) -> CarrierConfig {
        CarrierConfig::mmwave(0, 40.0, 1000.0, n)
    }

    #[test]
    fn disabled_gives_zero_vector() {
        let p = FadingParams {
            enabled: false,
            ..Default::default()
        };
        let mut rng = RngStream::new("f", 1);
        let v: Vec<f64> = resample_fading(&carrier(8), &p, &mut rng);
        assert_eq!(v, vec![0.0; 8]);
    }

    #[test]
    fn sample_sigma_matches() {
        // sd of the sample sd for n=1e5 normal draws is sigma/sqrt(2n) ~ 0.009.
        let p = FadingParams::default();
        let mut rng = RngStream::new("fading/sigma", 5);
        let v: Vec<f64> = resample_fading(&carrier(100_000), &p, &mut rng);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((var.sqrt() - 4.0).abs() < 0.1, "sd {}", var.sqrt());
    }

    #[test]
    fn same_stream_state_same_vector() {
        let p = FadingParams::default();
        let a: Vec<f64> = resample_fading(&carrier(16), &p, &mut RngStream::new("x", 9));
        let b: Vec<f64> = resample_fading(&carrier(16), &p, &mut RngStream::new("x", 9));
        assert_eq!(a, b);
    }

    #[test]
    fn coherence_bandwidth_correlates_neighbours() {
        let p = FadingParams {
            coherence_bandwidth_mhz: Some(500.0),
            ..Default::default()
        };
        let mut rng = RngStream::new("corr", 2);
        let v: Vec<f64> = resample_fading(&CarrierConfig::mmwave(0, 40.0, 20_000.0, 20_000), &p, &mut rng);
        // subband width 1 MHz -> rho = exp(-1/500) ~ 0.998
        let n = v.len() - 1;
        let cov = (0..n).map(|i| v[i] * v[i + 1]).sum::<f64>() / n as f64;
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!(cov / var > 0.95);
    }
}
