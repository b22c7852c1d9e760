use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rat {
    Lte,
    Mmwave,
}

impl Rat {
    pub fn as_str(self) -> &'static str {
        match self {
            Rat::Lte => "LTE",
            Rat::Mmwave => "MMWAVE",
        }
    }
}

fn default_n_subbands() -> u32 {
    1
}
fn default_symbols() -> u32 {
    24
}
fn default_symbol_us() -> f64 {
    4.16
}
fn default_subframes() -> u32 {
    10
}
fn default_control_symbols() -> u32 {
    2
}
fn default_rat() -> Rat {
    Rat::Mmwave
}

/// Numerology, frequency and bandwidth of one component carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierConfig {
    pub cc_id: u8,
    #[serde(default = "default_rat")]
    pub rat: Rat,
    pub center_freq_ghz: f64,
    pub bandwidth_mhz: f64,
    #[serde(default = "default_n_subbands")]
    pub n_subbands: u32,
    #[serde(default = "default_symbols")]
    pub symbols_per_subframe: u32,
    #[serde(default = "default_symbol_us")]
    pub symbol_duration_us: f64,
    #[serde(default = "default_subframes")]
    pub subframes_per_frame: u32,
    #[serde(default = "default_control_symbols")]
    pub control_symbols: u32,
    #[serde(default)]
    pub is_primary: bool,
    /// Overrides the scenario-wide transmit power for this carrier.
    #[serde(default)]
    pub tx_power_dbm: Option<f64>,
}

impl CarrierConfig {
    /// mmWave carrier with the default 24 x 4.16 us frame.
    pub fn mmwave(cc_id: u8, center_freq_ghz: f64, bandwidth_mhz: f64, n_subbands: u32) -> Self {
        CarrierConfig {
            cc_id,
            rat: Rat::Mmwave,
            center_freq_ghz,
            bandwidth_mhz,
            n_subbands,
            symbols_per_subframe: default_symbols(),
            symbol_duration_us: default_symbol_us(),
            subframes_per_frame: default_subframes(),
            control_symbols: default_control_symbols(),
            is_primary: cc_id == 0,
            tx_power_dbm: None,
        }
    }

    /// LTE carrier: 1 ms subframe of 14 symbols.
    pub fn lte(cc_id: u8, center_freq_ghz: f64, bandwidth_mhz: f64) -> Self {
        CarrierConfig {
            cc_id,
            rat: Rat::Lte,
            center_freq_ghz,
            bandwidth_mhz,
            n_subbands: 1,
            symbols_per_subframe: 14,
            symbol_duration_us: 1000.0 / 14.0,
            subframes_per_frame: 10,
            control_symbols: 2,
            is_primary: cc_id == 0,
            tx_power_dbm: None,
        }
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_mhz * 1e6
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_duration_us * 1e-6
    }

    pub fn subframe_duration_s(&self) -> f64 {
        self.symbols_per_subframe as f64 * self.symbol_duration_s()
    }

    pub fn data_symbols(&self) -> u32 {
        self.symbols_per_subframe.saturating_sub(self.control_symbols)
    }

    /// Occupied spectrum `[low, high]` in GHz.
    pub fn spectrum_ghz(&self) -> (f64, f64) {
        let half = self.bandwidth_mhz / 2000.0;
        (self.center_freq_ghz - half, self.center_freq_ghz + half)
    }

    pub fn overlaps(&self, other: &CarrierConfig) -> bool {
        let (a0, a1) = self.spectrum_ghz();
        let (b0, b1) = other.spectrum_ghz();
        // touching edges are allowed (contiguous allocation)
        a0 < b1 - 1e-9 && b0 < a1 - 1e-9
    }

    /// Field-level problems with this carrier on its own.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let id = format!("{} cc{}", self.rat.as_str(), self.cc_id);
        if !(self.bandwidth_mhz > 0.0) {
            v.push(format!("{id}: bandwidth_mhz must be > 0"));
        }
        if self.n_subbands < 1 {
            v.push(format!("{id}: n_subbands must be >= 1"));
        }
        if !(0.5..=100.0).contains(&self.center_freq_ghz) {
            v.push(format!("{id}: center_freq_ghz outside [0.5, 100]"));
        }
        if !(self.symbol_duration_us > 0.0) {
            v.push(format!("{id}: symbol_duration_us must be > 0"));
        }
        if self.data_symbols() == 0 {
            v.push(format!("{id}: no data symbols left after control symbols"));
        }
        v
    }
}
