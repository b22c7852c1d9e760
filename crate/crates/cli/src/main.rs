use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use mmwave_mc::error::Error;
use mmwave_mc::scenario::{run_experiment, ScenarioFile};

/// Run a carrier-aggregation / dual-connectivity scenario.
///
/// Files with `[[variants]]` or a `[sweep]` run every point; each point
/// writes into its own subdirectory of the output directory.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; run k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent runs per point.
    #[arg(long)]
    runs: Option<u32>,
    /// Simulated seconds per run.
    #[arg(long)]
    duration: Option<f64>,
    /// Where traces and summary.csv go.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Only run points whose label starts with this prefix.
    #[arg(long)]
    only: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(Error::Validation(list)) = e.downcast_ref::<Error>() {
                eprintln!("invalid scenario {}:", args.config.display());
                for v in list {
                    eprintln!("  - {v}");
                }
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: &Args) -> anyhow::Result<()> {
    let file = ScenarioFile::load(&args.config)?;
    let mut points = file.expand()?;
    if let Some(prefix) = &args.only {
        points.retain(|p| p.label.starts_with(prefix.as_str()));
        anyhow::ensure!(!points.is_empty(), "no point label starts with `{prefix}`");
    }
    for p in &mut points {
        let cfg = &mut p.config;
        if let Some(s) = args.seed {
            cfg.master_seed = Some(s);
        }
        if let Some(r) = args.runs {
            cfg.n_runs = r;
        }
        if let Some(d) = args.duration {
            cfg.duration_s = d;
        }
        for w in cfg.validate()? {
            log::warn!("{}: {w}", if p.label.is_empty() { "scenario" } else { &p.label });
        }
    }
    for p in &points {
        let dir = if p.label.is_empty() {
            args.out_dir.clone()
        } else {
            args.out_dir.join(&p.label)
        };
        let started = Instant::now();
        let res = run_experiment(&p.config, Some(&dir)).with_context(|| format!("running `{}`", p.config.name))?;
        let s_rlc = res.summary.s_rlc_bps.mean / 1e9;
        println!(
            "{:<32} runs={:<3} S_RLC={:.4} Gbit/s  ({:.1} s) -> {}",
            match (p.label.as_str(), p.config.name.as_str()) {
                ("", "") => "scenario",
                ("", name) => name,
                (label, _) => label,
            },
            p.config.n_runs,
            s_rlc,
            started.elapsed().as_secs_f64(),
            dir.join("summary.csv").display()
        );
    }
    Ok(())
}
