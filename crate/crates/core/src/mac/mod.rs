//! Per-carrier MAC: link adaptation, transport-block sizing, HARQ and the
//! round-robin scheduler. Each carrier runs its own scheduler instance.

mod harq;
mod mcs;
mod scheduler;

pub use harq::{transport_outcome, FeedbackResult, HarqEntity, HarqProcess, HarqState, TbOutcome};
pub use mcs::{tb_size_bytes, tb_size_for_efficiency, McsDecision, McsTable, MCS_COUNT};
pub use scheduler::{CarrierScheduler, Dci, FlowId, MacParams};
