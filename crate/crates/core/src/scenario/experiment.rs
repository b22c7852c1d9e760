use std::path::Path;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::simulation::{RunOutput, Simulation};
use super::summary::SummaryMetrics;
use super::trace::TraceWriter;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunOutput>,
    pub summary: SummaryMetrics,
}

/// One run with seed `master_seed + run_index`, traces written to `out_dir`
/// when given.
pub fn run_single(cfg: &ScenarioConfig, run_index: u32, out_dir: Option<&Path>) -> Result<RunOutput> {
    let seed = cfg.seed().wrapping_add(run_index as u64);
    let trace = match out_dir {
        Some(dir) => TraceWriter::to_dir(dir, run_index, &cfg.trace)?,
        None => TraceWriter::disabled(),
    };
    Simulation::new(cfg, seed, trace)?.run()
}

/// Runs `cfg.n_runs` independent replications in parallel and aggregates
/// them. With `out_dir`, per-run traces and `summary.csv` land there.
pub fn run_experiment(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let runs = (0..cfg.n_runs)
        .into_par_iter()
        .map(|k| run_single(cfg, k, out_dir))
        .collect::<Result<Vec<_>>>()?;
    let metrics: Vec<_> = runs.iter().map(|r| r.metrics.clone()).collect();
    let summary = SummaryMetrics::from_runs(&metrics);
    if let Some(dir) = out_dir {
        summary.write_csv(dir.join("summary.csv"))?;
    }
    Ok(ExperimentResult { runs, summary })
}
