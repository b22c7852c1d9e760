//! Dual-connectivity control plane: measurements, secondary-cell selection,
//! fast secondary handover, LTE fallback and the X2 link.

mod control;
mod measurement;
mod x2;

pub use control::{
    detect_outage_and_fallback, DcMode, DcParams, DcState, DcTransition, HandoverPlan, Node, SignalKind,
    SignalMessage,
};
pub use measurement::{select_secondary, MeasurementFilter, MeasurementReport};
pub use x2::{x2_deliver, X2Link};
