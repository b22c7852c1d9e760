//! Component-carrier manager: splits buffer-status reports across carriers,
//! pins control signalling to the primary carrier, and applies RRC carrier
//! reconfiguration.

mod bsr;
mod manager;

pub use bsr::{largest_remainder_split, BufferStatusReport};
pub use manager::{
    route_control, split_bsr_bandwidth_aware, split_bsr_noop, split_bsr_round_robin, CarrierSet, CcManager,
    CcManagerPolicy, ControlMessage, Reconfiguration,
};
