use crate::channel::CarrierConfig;
use crate::scalar::{db_to_linear, Scalar};

pub const MCS_COUNT: usize = 29;

/// Outcome of link adaptation. `zero_rate` marks an SINR below the lowest
/// threshold: the user is not schedulable on this carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsDecision {
    pub mcs: u8,
    pub zero_rate: bool,
}

/// Truncated-Shannon MCS table.
///
/// Entry `m` has threshold `first + m * step` dB and spectral efficiency
/// `min(0.75 log2(1 + thr), 7.4)` bit/s/Hz. The defaults put the top entry
/// exactly where the efficiency reaches its cap.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable<T: Scalar = f64> {
    thresholds_db: Vec<T>,
    efficiency: Vec<T>,
}

impl<T: Scalar> Default for McsTable<T> {
    fn default() -> Self {
        Self::truncated_shannon(T::lit(-9.5), T::lit(1.4), T::lit(0.75), T::lit(7.4))
    }
}

impl<T: Scalar> McsTable<T> {
    pub fn truncated_shannon(first_threshold_db: T, step_db: T, attenuation: T, max_efficiency: T) -> Self {
        let thresholds_db: Vec<T> = (0..MCS_COUNT)
            .map(|m| first_threshold_db + step_db * T::lit(m as f64))
            .collect();
        let efficiency = thresholds_db
            .iter()
            .map(|&thr| (attenuation * (T::one() + db_to_linear(thr)).log2()).min(max_efficiency))
            .collect();
        McsTable {
            thresholds_db,
            efficiency,
        }
    }

    pub fn threshold_db(&self, mcs: u8) -> T {
        self.thresholds_db[mcs as usize]
    }

    pub fn max_efficiency(&self) -> T {
        self.efficiency[MCS_COUNT - 1]
    }

    /// Highest MCS whose threshold does not exceed `sinr_db`.
    pub fn select(&self, sinr_db: T) -> McsDecision {
        match self.thresholds_db.iter().rposition(|&thr| thr <= sinr_db) {
            Some(m) => McsDecision {
                mcs: m as u8,
                zero_rate: false,
            },
            None => McsDecision {
                mcs: 0,
                zero_rate: true,
            },
        }
    }

    /// Bit/s/Hz carried by the decision (0 when zero-rate).
    pub fn spectral_efficiency(&self, decision: McsDecision) -> T {
        if decision.zero_rate {
            T::zero()
        } else {
            self.efficiency[decision.mcs as usize]
        }
    }

    /// Block error rate: logistic in dB, 0.1 at the MCS threshold and falling
    /// about a decade per dB above it.
    pub fn bler(&self, sinr_db: T, mcs: u8) -> T {
        let margin = sinr_db - self.threshold_db(mcs);
        T::one() / (T::one() + T::lit(9.0) * T::lit(10.0).powf(margin))
    }
}

/// `floor(se * B * n_symbols * T_sym / 8)` bytes.
pub fn tb_size_for_efficiency(efficiency: f64, n_symbols: u32, carrier: &CarrierConfig) -> u32 {
    let bits = efficiency * carrier.bandwidth_hz() * n_symbols as f64 * carrier.symbol_duration_s();
    // the epsilon absorbs representation error in products like 4 * 5e8 * 4.16e-6
    (bits / 8.0 + 1e-6).floor().max(0.0) as u32
}

pub fn tb_size_bytes<T: Scalar>(table: &McsTable<T>, decision: McsDecision, n_symbols: u32, carrier: &CarrierConfig) -> u32 {
    tb_size_for_efficiency(table.spectral_efficiency(decision).as_f64(), n_symbols, carrier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn floor_and_ceiling() {
        let t = McsTable::<f64>::default();
        assert_eq!(t.select(-10.0), McsDecision { mcs: 0, zero_rate: true });
        assert_eq!(t.select(40.0), McsDecision { mcs: 28, zero_rate: false });
        assert_eq!(t.spectral_efficiency(t.select(40.0)), 7.4);
    }

    #[test]
    fn monotone_over_grid() {
        // exhaustive scan of -10..40 dB in 0.01 dB steps
        let t = McsTable::<f64>::default();
        let mut prev = t.select(-10.0);
        for k in 1..=5000 {
            let cur = t.select(-10.0 + k as f64 * 0.01);
            let key = |d: McsDecision| if d.zero_rate { -1 } else { d.mcs as i32 };
            assert!(key(cur) >= key(prev));
            prev = cur;
        }
    }

    #[test]
    fn efficiency_is_increasing_and_capped() {
        let t = McsTable::<f32>::default();
        for m in 1..MCS_COUNT as u8 {
            assert!(t.threshold_db(m) > t.threshold_db(m - 1));
            let a = t.spectral_efficiency(McsDecision { mcs: m - 1, zero_rate: false });
            let b = t.spectral_efficiency(McsDecision { mcs: m, zero_rate: false });
            assert!(b > a, "mcs {m}");
        }
        assert_abs_diff_eq!(t.max_efficiency(), 7.4);
    }

    #[test]
    fn tb_size_examples() {
        let c = CarrierConfig::mmwave(0, 40.0, 500.0, 1);
        assert_eq!(tb_size_for_efficiency(4.0, 1, &c), 1040);
        let t = McsTable::<f64>::default();
        assert_eq!(tb_size_bytes(&t, McsDecision { mcs: 0, zero_rate: true }, 22, &c), 0);
    }

    #[test]
    fn bler_anchors() {
        let t = McsTable::<f64>::default();
        for m in [0u8, 10, 28] {
            let thr = t.threshold_db(m);
            assert_abs_diff_eq!(t.bler(thr, m), 0.1, epsilon = 1e-12);
            // 1 / (1 + 9e15) ~ 1.1e-16
            assert!(t.bler(thr + 15.0, m) <= 1e-3);
            assert!(t.bler(thr + 1.0, m) < 0.012);
        }
    }

    proptest! {
        #[test]
        fn tb_size_linear(se in 0.05f64..7.4, n in 1u32..22, bw in 50.0f64..1000.0) {
            let c = CarrierConfig::mmwave(0, 40.0, bw, 1);
            let c2 = CarrierConfig::mmwave(0, 40.0, 2.0 * bw, 1);
            let one = tb_size_for_efficiency(se, n, &c) as i64;
            let two = tb_size_for_efficiency(se, n, &c2) as i64;
            prop_assert!((two - 2 * one).abs() <= 1);
            let double_n = tb_size_for_efficiency(se, 2 * n, &c) as i64;
            prop_assert!((double_n - 2 * one).abs() <= 1);
        }
    }
}
