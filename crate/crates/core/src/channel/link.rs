use serde::{Deserialize, Serialize};

use super::{
    beamforming_gain_db, pathloss_db, resample_fading, thermal_noise_dbm, update_blockage, BlockageDynamics,
    BlockageState, CarrierConfig, FadingParams,
};
use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, linear_to_db, Scalar};
use crate::sim::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry<T: Scalar = f64> {
    pub distance_2d_m: T,
    pub bs_antenna_elements: u32,
    pub ue_antenna_elements: u32,
}

impl<T: Scalar> LinkGeometry<T> {
    pub fn new(distance_2d_m: T, bs_antenna_elements: u32, ue_antenna_elements: u32) -> Self {
        LinkGeometry {
            distance_2d_m,
            bs_antenna_elements,
            ue_antenna_elements,
        }
    }
}

/// Transmit-side and receiver-noise parameters of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T: Scalar = f64> {
    pub tx_power_dbm: T,
    pub noise_figure_db: T,
}

/// Channel snapshot of one (cell, carrier, UE) link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState<T: Scalar = f64> {
    pub los: bool,
    pub pathloss_db: T,
    pub shadowing_db: T,
    pub subband_fading_db: Vec<T>,
    pub blockage: BlockageState<T>,
    /// Additional scripted loss (e.g. a forced outage window).
    pub extra_loss_db: T,
    pub subband_sinr_db: Vec<T>,
    pub wideband_sinr_db: T,
}

/// Per-subband SINR with the transmit power split evenly across subbands and
/// no interference (single serving cell).
pub fn subband_sinr<T: Scalar>(
    carrier: &CarrierConfig,
    link: &LinkState<T>,
    budget: &LinkBudget<T>,
    geom: &LinkGeometry<T>,
) -> Vec<T> {
    let n = carrier.n_subbands.max(1) as usize;
    let n_t = T::lit(n as f64);
    let power_share = budget.tx_power_dbm - T::lit(10.0) * n_t.log10();
    let noise = thermal_noise_dbm(T::lit(carrier.bandwidth_hz()) / n_t) + budget.noise_figure_db;
    let gain = beamforming_gain_db::<T>(geom.bs_antenna_elements, geom.ue_antenna_elements);
    let common = power_share - link.pathloss_db - link.shadowing_db - link.blockage.loss_db() - link.extra_loss_db
        + gain
        - noise;
    (0..n)
        .map(|i| common + link.subband_fading_db.get(i).copied().unwrap_or_else(T::zero))
        .collect()
}

/// `10 log10(mean(10^(s/10)))`: the average SINR used for link adaptation.
pub fn wideband_sinr<T: Scalar>(subbands_db: &[T]) -> Result<T> {
    if subbands_db.is_empty() {
        return Err(Error::config("wideband SINR of an empty subband vector"));
    }
    let sum = subbands_db.iter().fold(T::zero(), |acc, &s| acc + db_to_linear(s));
    Ok(linear_to_db(sum / T::lit(subbands_db.len() as f64)))
}

/// Capacity-equivalent SINR: the flat SINR that carries the same mean
/// Shannon rate as the subband vector. Used to decide transport-block
/// decoding, where deep subband fades cost more than the linear mean shows.
pub fn effective_sinr<T: Scalar>(subbands_db: &[T]) -> Result<T> {
    if subbands_db.is_empty() {
        return Err(Error::config("effective SINR of an empty subband vector"));
    }
    let mean_rate = subbands_db
        .iter()
        .fold(T::zero(), |acc, &s| acc + (T::one() + db_to_linear(s)).log2())
        / T::lit(subbands_db.len() as f64);
    Ok(linear_to_db(mean_rate.exp2() - T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LosModel {
    Los,
    #[default]
    Nlos,
    /// Urban-macro LOS probability, redrawn every `los_update_period_s`.
    Probabilistic,
}

/// Scenario-wide radio parameters; every field can be overridden in config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub shadowing_sigma_los_db: f64,
    pub shadowing_sigma_nlos_db: f64,
    pub fading: FadingParams,
    pub blockage: BlockageDynamics,
    pub update_period_s: f64,
    pub los_model: LosModel,
    pub los_update_period_s: f64,
    pub bs_antenna_elements: u32,
    pub ue_antenna_elements: u32,
    pub lte_tx_power_dbm: f64,
    /// Distances below this are clamped before evaluating pathloss.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            tx_power_dbm: 30.0,
            noise_figure_db: 5.0,
            shadowing_sigma_los_db: 4.0,
            shadowing_sigma_nlos_db: 6.0,
            fading: FadingParams::default(),
            blockage: BlockageDynamics::default(),
            update_period_s: 1e-3,
            los_model: LosModel::Nlos,
            los_update_period_s: 1.0,
            bs_antenna_elements: 64,
            ue_antenna_elements: 16,
            lte_tx_power_dbm: 43.0,
            min_distance_m: 10.0,
        }
    }
}

/// Independent channel instance for one (cell, carrier, UE) triple.
#[derive(Debug, Clone)]
pub struct CarrierChannel {
    pub cell_id: u32,
    pub ue_id: u32,
    carrier: CarrierConfig,
    budget: LinkBudget<f64>,
    sigma_los: f64,
    sigma_nlos: f64,
    shadow_z: f64,
    fading: FadingParams,
    dynamics: BlockageDynamics,
    fading_rng: RngStream,
    blockage_rng: RngStream,
    next_fading_at: f64,
    min_distance_m: f64,
    state: LinkState<f64>,
}

impl CarrierChannel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cell_id: u32,
        ue_id: u32,
        carrier: &CarrierConfig,
        params: &ChannelParams,
        blockage_enabled: bool,
        master_seed: u64,
        geom: &LinkGeometry<f64>,
        los: bool,
    ) -> Result<Self> {
        let suffix = format!("cell{cell_id}/{}cc{}/ue{ue_id}", rat_prefix(carrier), carrier.cc_id);
        let shadow_z = RngStream::new(&format!("shadowing/{suffix}"), master_seed).normal(0.0, 1.0);
        let mut fading_rng = RngStream::new(&format!("fading/{suffix}"), master_seed);
        let mut blockage_rng = RngStream::new(&format!("blockage/{suffix}"), master_seed);
        let fading_vec = resample_fading(carrier, &params.fading, &mut fading_rng);
        let blockage = BlockageState::initial(blockage_enabled, &params.blockage, &mut blockage_rng);
        let default_power = match carrier.rat {
            super::Rat::Lte => params.lte_tx_power_dbm,
            super::Rat::Mmwave => params.tx_power_dbm,
        };
        let mut ch = CarrierChannel {
            cell_id,
            ue_id,
            carrier: carrier.clone(),
            budget: LinkBudget {
                tx_power_dbm: carrier.tx_power_dbm.unwrap_or(default_power),
                noise_figure_db: params.noise_figure_db,
            },
            sigma_los: params.shadowing_sigma_los_db,
            sigma_nlos: params.shadowing_sigma_nlos_db,
            shadow_z,
            fading: params.fading,
            dynamics: params.blockage,
            fading_rng,
            blockage_rng,
            next_fading_at: params.fading.period_s,
            min_distance_m: params.min_distance_m,
            state: LinkState {
                los,
                pathloss_db: 0.0,
                shadowing_db: 0.0,
                subband_fading_db: fading_vec,
                blockage,
                extra_loss_db: 0.0,
                subband_sinr_db: Vec::new(),
                wideband_sinr_db: 0.0,
            },
        };
        ch.recompute(geom, los)?;
        Ok(ch)
    }

    pub fn carrier(&self) -> &CarrierConfig {
        &self.carrier
    }

    pub fn state(&self) -> &LinkState<f64> {
        &self.state
    }

    pub fn budget(&self) -> &LinkBudget<f64> {
        &self.budget
    }

    pub fn set_extra_loss_db(&mut self, loss_db: f64) {
        self.state.extra_loss_db = loss_db;
    }

    /// Advances blockage by `dt`, redraws fading when its period has elapsed,
    /// and refreshes pathloss and SINR for the new geometry.
    pub fn update(&mut self, now: f64, dt: f64, geom: &LinkGeometry<f64>, los: bool) -> Result<()> {
        if dt > 0.0 {
            self.state.blockage = update_blockage(self.state.blockage, dt, &self.dynamics, &mut self.blockage_rng);
        }
        // small epsilon so 10 x 1 ms steps reach a 10 ms boundary
        if now + 1e-9 >= self.next_fading_at {
            self.state.subband_fading_db = resample_fading(&self.carrier, &self.fading, &mut self.fading_rng);
            while self.next_fading_at <= now + 1e-9 {
                self.next_fading_at += self.fading.period_s;
            }
        }
        self.recompute(geom, los)
    }

    fn recompute(&mut self, geom: &LinkGeometry<f64>, los: bool) -> Result<()> {
        let d = geom.distance_2d_m.max(self.min_distance_m);
        self.state.los = los;
        self.state.pathloss_db = pathloss_db(self.carrier.center_freq_ghz, d, los)?;
        self.state.shadowing_db = self.shadow_z * if los { self.sigma_los } else { self.sigma_nlos };
        self.state.subband_sinr_db = subband_sinr(&self.carrier, &self.state, &self.budget, geom);
        self.state.wideband_sinr_db = wideband_sinr(&self.state.subband_sinr_db)?;
        Ok(())
    }

    pub fn wideband_sinr_db(&self) -> f64 {
        self.state.wideband_sinr_db
    }

    pub fn effective_sinr_db(&self) -> f64 {
        effective_sinr(&self.state.subband_sinr_db).expect("non-empty subbands")
    }
}

fn rat_prefix(carrier: &CarrierConfig) -> &'static str {
    match carrier.rat {
        super::Rat::Lte => "lte-",
        super::Rat::Mmwave => "",
    }
}
