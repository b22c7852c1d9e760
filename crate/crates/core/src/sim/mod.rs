//! Discrete-event engine and reproducible random substreams.

mod engine;
mod rng;

pub use engine::{Engine, Event, EventId, EventTag};
pub use rng::RngStream;
