//! Discrete-event simulator of mmWave/LTE multi-connectivity: per-carrier
//! channels and schedulers, a component-carrier manager, RLC/PDCP with split
//! bearers, and LTE-anchored dual connectivity.
//!
//! The radio math (pathloss, SINR aggregation, MCS tables, blockage) is
//! generic over [`scalar::Scalar`]; the aliases below fix it to `f32` or
//! `f64`. The event-driven world itself runs in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod scalar;
pub mod sim;
pub mod channel;
pub mod ca;
pub mod mac;
pub mod rlc;
pub mod dc;
pub mod scenario;

pub use error::{Error, Result};

pub type LinkStateF32 = channel::LinkState<f32>;
pub type LinkStateF64 = channel::LinkState<f64>;
pub type LinkGeometryF32 = channel::LinkGeometry<f32>;
pub type LinkGeometryF64 = channel::LinkGeometry<f64>;
pub type LinkBudgetF32 = channel::LinkBudget<f32>;
pub type LinkBudgetF64 = channel::LinkBudget<f64>;
pub type BlockageStateF32 = channel::BlockageState<f32>;
pub type BlockageStateF64 = channel::BlockageState<f64>;
pub type McsTableF32 = mac::McsTable<f32>;
pub type McsTableF64 = mac::McsTable<f64>;
