//! Per-carrier radio channel.
//!
//! Every component carrier owns an independent [`CarrierChannel`] with its
//! own random substreams for shadowing, fading and blockage, so the
//! realisations on one carrier never depend on how another is configured.

mod blockage;
mod carrier;
mod fading;
mod link;
mod pathloss;

pub use blockage::{update_blockage, BlockageDynamics, BlockageState};
pub use carrier::{CarrierConfig, Rat};
pub use fading::{resample_fading, FadingParams};
pub use link::{
    effective_sinr, subband_sinr, wideband_sinr, CarrierChannel, ChannelParams, LinkBudget,
    LinkGeometry, LinkState, LosModel,
};
pub use pathloss::{beamforming_gain_db, los_probability, pathloss_db, thermal_noise_dbm};
