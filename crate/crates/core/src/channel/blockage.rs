use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::sim::RngStream;

/// Mean sojourn times of the two-state blocked/free process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockageDynamics {
    pub attenuation_db: f64,
    pub mean_blocked_s: f64,
    pub mean_free_s: f64,
}

impl Default for BlockageDynamics {
    fn default() -> Self {
        BlockageDynamics {
            attenuation_db: 30.0,
            mean_blocked_s: 0.5,
            mean_free_s: 1.5,
        }
    }
}

impl BlockageDynamics {
    /// Long-run fraction of time spent blocked.
    pub fn stationary_blocked(&self) -> f64 {
        self.mean_blocked_s / (self.mean_blocked_s + self.mean_free_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageState<T: Scalar = f64> {
    pub active: bool,
    pub attenuation_db: T,
    pub enabled_for_carrier: bool,
}

impl<T: Scalar> BlockageState<T> {
    pub fn disabled(attenuation_db: T) -> Self {
        BlockageState {
            active: false,
            attenuation_db,
            enabled_for_carrier: false,
        }
    }

    /// Initial state drawn from the stationary distribution.
    pub fn initial(enabled: bool, dynamics: &BlockageDynamics, rng: &mut RngStream) -> Self {
        let attenuation_db = T::lit(dynamics.attenuation_db);
        if !enabled {
            return Self::disabled(attenuation_db);
        }
        BlockageState {
            active: rng.bernoulli(dynamics.stationary_blocked()),
            attenuation_db,
            enabled_for_carrier: true,
        }
    }

    /// Attenuation currently applied to the link.
    pub fn loss_db(&self) -> T {
        if self.active {
            self.attenuation_db
        } else {
            T::zero()
        }
    }
}

/// Advances the blocked/free process by `dt` seconds. Exactly one uniform is
/// drawn per call on enabled carriers; disabled carriers draw nothing.
pub fn update_blockage<T: Scalar>(
    state: BlockageState<T>,
    dt: f64,
    dynamics: &BlockageDynamics,
    rng: &mut RngStream,
) -> BlockageState<T> {
    debug_assert!(dt > 0.0);
    if !state.enabled_for_carrier {
        return BlockageState { active: false, ..state };
    }
    let mean = if state.active {
        dynamics.mean_blocked_s
    } else {
        dynamics.mean_free_s
    };
    let p_switch = 1.0 - (-dt / mean).exp();
    let switch = rng.uniform() < p_switch;
    BlockageState {
        active: state.active ^ switch,
        ..state
    }
}
