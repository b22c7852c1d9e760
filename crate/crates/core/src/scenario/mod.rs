//! Scenario configuration, the simulation world that wires the stack
//! together, trace output and run summaries.

pub mod config;
pub mod experiment;
pub mod mobility;
pub mod simulation;
pub mod summary;
pub mod trace;

/// Cell id of the LTE anchor eNB in dual-connectivity scenarios.
pub const LTE_CELL_ID: u32 = 100;

pub use config::{
    parse_config, parse_config_str, CellConfig, DcConfig, ExperimentPoint, Mobility, Placement, ReconfigurationEvent,
    ScenarioConfig, ScenarioFile, ScriptEvent, TraceConfig, Traffic,
};
pub use experiment::{run_experiment, run_single, ExperimentResult};
pub use mobility::{walk_step, MobilityState};
pub use simulation::{RunOutput, RunStats, Simulation};
pub use summary::{estimate, run_metrics_from_traces, summarize, Estimate, RunMetrics, RunTraces, SummaryMetrics};
pub use trace::{MemoryTraces, TraceWriter};
