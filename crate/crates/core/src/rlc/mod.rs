//! RLC entities and the split-bearer PDCP.

mod entity;
mod pdcp;

pub use entity::{ForwardMode, Forwarded, Leg, RlcEntity, RlcEvent, RlcMode, RlcPdu, RLC_HEADER_BYTES};
pub use pdcp::{PdcpPdu, ReceiveOutcome, RouteDecision, RoutingPolicy, SplitBearer};
