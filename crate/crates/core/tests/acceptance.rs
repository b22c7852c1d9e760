//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary so the lines always show up in
//! `cargo test` output.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use mmwave_mc::ca::{largest_remainder_split, BufferStatusReport, CarrierSet, CcManagerPolicy};
use mmwave_mc::channel::{wideband_sinr, CarrierConfig};
use mmwave_mc::dc::{x2_deliver, X2Link};
use mmwave_mc::scenario::{run_experiment, ExperimentResult, ScenarioConfig, ScenarioFile, Simulation, TraceWriter};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// pinned tolerances
const CA_GAIN_RANGE: (f64, f64) = (0.0, 0.40);
const SAME_BW_RUNTIME_S: f64 = 60.0;
const SAME_BW_SEEDS: u32 = 20;
const SECONDARY_PER_MHZ_TOL: f64 = 0.15;
const CONSERVATION_TRIALS: usize = 10_000;
const HANDOVER_MIN_SNS: usize = 10_000;
const WIDEBAND_ORACLE_TOL_DB: f64 = 0.01;
const X2_TOL_S: f64 = 1e-6;

const DISTANCES: [f64; 3] = [50.0, 100.0, 150.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> ScenarioFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// `variant -> [(distance, config)]` for a swept file.
fn points(file: &ScenarioFile) -> BTreeMap<String, Vec<(Option<f64>, ScenarioConfig)>> {
    let mut out: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for p in file.expand().expect("shipped scenario is valid") {
        out.entry(p.variant.unwrap_or_default())
            .or_default()
            .push((p.distance_m, p.config));
    }
    out
}

fn run(cfg: &ScenarioConfig) -> ExperimentResult {
    run_experiment(cfg, None).expect("scenario runs")
}

fn gbps(x: f64) -> String {
    format!("{:.3}", x / 1e9)
}

/// S_RLC per distance for every same-bandwidth variant, plus the wall time
/// spent on the two contiguous no-blockage variants.
struct SameBandwidth {
    s_rlc: BTreeMap<String, Vec<f64>>,
    runs: Vec<ExperimentResult>,
    runtime_s: f64,
}

fn same_bandwidth() -> SameBandwidth {
    let file = scenario("ca-same-bandwidth.toml");
    let mut s_rlc = BTreeMap::new();
    let mut runs = Vec::new();
    let mut runtime_s = 0.0;
    for (variant, pts) in points(&file) {
        let timed = variant == "contiguous-2cc" || variant == "contiguous-1cc";
        let mut series = Vec::new();
        for (d, cfg) in pts {
            assert_eq!(cfg.n_runs, SAME_BW_SEEDS, "{variant}: shipped seed count");
            let started = Instant::now();
            let r = run(&cfg);
            if timed {
                runtime_s += started.elapsed().as_secs_f64();
            }
            assert_eq!(d, Some(DISTANCES[series.len()]));
            series.push(r.summary.s_rlc_bps.mean);
            runs.push(r);
        }
        s_rlc.insert(variant, series);
    }
    SameBandwidth {
        s_rlc,
        runs,
        runtime_s,
    }
}

fn ca_gain(sb: &SameBandwidth) -> Outcome {
    let two = &sb.s_rlc["contiguous-2cc"];
    let one = &sb.s_rlc["contiguous-1cc"];
    let every = two.iter().zip(one).all(|(a, b)| a >= b);
    let gain50 = two[0] / one[0] - 1.0;
    let in_range = (CA_GAIN_RANGE.0..=CA_GAIN_RANGE.1).contains(&gain50);
    let fast = sb.runtime_s < SAME_BW_RUNTIME_S;
    let detail = format!(
        "2cc {:?} vs 1cc {:?} Gbit/s, 50 m gain {:+.1}% (allowed [{:.0}%, {:.0}%]), runtime {:.1} s (< {SAME_BW_RUNTIME_S} s)",
        two.iter().map(|x| gbps(*x)).collect::<Vec<_>>(),
        one.iter().map(|x| gbps(*x)).collect::<Vec<_>>(),
        gain50 * 100.0,
        CA_GAIN_RANGE.0 * 100.0,
        CA_GAIN_RANGE.1 * 100.0,
        sb.runtime_s
    );
    outcome(every && in_range && fast, detail)
}

fn monotonicity(sb: &SameBandwidth) -> Outcome {
    let mut bad = Vec::new();
    for (v, s) in &sb.s_rlc {
        if !s.windows(2).all(|w| w[1] < w[0]) {
            bad.push(v.clone());
        }
    }
    let nc = &sb.s_rlc["noncontiguous-1cc"];
    let c = &sb.s_rlc["contiguous-1cc"];
    let below = nc.iter().zip(c).all(|(a, b)| a < b);
    let detail = format!(
        "{} series strictly decreasing{}; 1cc@73 GHz {:?} < 1cc@40 GHz {:?}",
        sb.s_rlc.len() - bad.len(),
        if bad.is_empty() {
            String::new()
        } else {
            format!(" (not: {})", bad.join(", "))
        },
        nc.iter().map(|x| gbps(*x)).collect::<Vec<_>>(),
        c.iter().map(|x| gbps(*x)).collect::<Vec<_>>(),
    );
    outcome(bad.is_empty() && below, detail)
}

fn blockage_robustness(sb: &SameBandwidth) -> Outcome {
    let loss = |v: &str| -> Vec<f64> {
        let clear = &sb.s_rlc[v];
        let blocked = &sb.s_rlc[&format!("{v}-blockage")];
        clear.iter().zip(blocked).map(|(c, b)| 1.0 - b / c).collect()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for alloc in ["contiguous", "noncontiguous"] {
        let two = loss(&format!("{alloc}-2cc"));
        let one = loss(&format!("{alloc}-1cc"));
        pass &= two.iter().zip(&one).all(|(a, b)| a < b);
        let pct = |x: &[f64]| x.iter().map(|l| format!("{:.1}%", l * 100.0)).collect::<Vec<_>>().join("/");
        parts.push(format!("{alloc}: 2cc loss {} vs 1cc {}", pct(&two), pct(&one)));
    }
    outcome(pass, parts.join("; "))
}

fn bandwidth_ratio_trend() -> Outcome {
    let file = scenario("ca-diff-bandwidth.toml");
    let pts = points(&file);
    let mut s = Vec::new();
    let mut primary = Vec::new();
    let mut secondary = Vec::new();
    for v in ["rcc-0.5", "rcc-0.25", "rcc-0.125"] {
        let (_, cfg) = &pts[v][0];
        let (b0, b1) = (cfg.carriers[0].bandwidth_mhz, cfg.carriers[1].bandwidth_mhz);
        let r = run(cfg);
        s.push(r.summary.s_rlc_bps.mean);
        primary.push(r.summary.per_cc_mac_bps["cc0"].mean / b0 / 1e6);
        secondary.push(r.summary.per_cc_mac_bps["cc1"].mean / b1 / 1e6);
    }
    let non_increasing = s.windows(2).all(|w| w[1] <= w[0]);
    let primary_down = primary.windows(2).all(|w| w[1] < w[0]);
    let centre = secondary.iter().sum::<f64>() / secondary.len() as f64;
    let spread = secondary.iter().map(|x| (x / centre - 1.0).abs()).fold(0.0, f64::max);
    let flat = spread <= SECONDARY_PER_MHZ_TOL;
    let f = |x: &[f64]| x.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" -> ");
    let detail = format!(
        "S_RLC {} Gbit/s; primary {} Mbit/s/MHz; secondary {} Mbit/s/MHz (max dev {:.1}% of mean, allowed {:.0}%)",
        f(&s.iter().map(|x| x / 1e9).collect::<Vec<_>>()),
        f(&primary),
        f(&secondary),
        spread * 100.0,
        SECONDARY_PER_MHZ_TOL * 100.0
    );
    outcome(non_increasing && primary_down && flat, detail)
}

fn conservation(sb: &SameBandwidth) -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut violations = 0usize;
    for _ in 0..CONSERVATION_TRIALS {
        let n = rng.random_range(1..=4u8);
        let carriers: Vec<CarrierConfig> = (0..n)
            .map(|k| {
                let mut c = CarrierConfig::mmwave(k, 28.0 + k as f64, rng.random_range(1.0..1000.0), 1);
                c.is_primary = k == 0;
                c
            })
            .collect();
        let set = CarrierSet::from_carriers(carriers).expect("valid set");
        let bsr = BufferStatusReport {
            ue_id: rng.random_range(0..8),
            bearer_id: 1,
            tx_queue_bytes: rng.random_range(0..10_000_000),
            retx_queue_bytes: rng.random_range(0..100_000),
            status_pdu_bytes: rng.random_range(0..100),
        };
        let mut policies = vec![CcManagerPolicy::RoundRobin, CcManagerPolicy::BandwidthAware];
        if n == 1 {
            policies.push(CcManagerPolicy::Noop);
        }
        for p in policies {
            let parts = p.split(&bsr, &set).expect("split");
            let sum = |f: fn(&BufferStatusReport) -> u64| parts.values().map(f).sum::<u64>();
            if sum(|b| b.tx_queue_bytes) != bsr.tx_queue_bytes
                || sum(|b| b.retx_queue_bytes) != bsr.retx_queue_bytes
                || sum(|b| b.status_pdu_bytes) != bsr.status_pdu_bytes
            {
                violations += 1;
            }
        }
    }
    let mut run_violations = 0usize;
    let mut n_runs = 0usize;
    for r in &sb.runs {
        for o in &r.runs {
            n_runs += 1;
            let mac: u64 = o.stats.mac_acked_bytes.values().sum();
            if mac < o.stats.rlc_delivered_bytes {
                run_violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && run_violations == 0,
        format!(
            "{CONSERVATION_TRIALS} random BSR splits: {violations} byte mismatches; {n_runs} runs: {run_violations} with MAC ACKed < RLC delivered"
        ),
    )
}

struct Traces {
    rlc: String,
    mac: String,
    dc: String,
    channel: String,
}

fn traced(cfg: &ScenarioConfig) -> Traces {
    let (w, m) = TraceWriter::in_memory(&cfg.trace).expect("trace sinks");
    Simulation::new(cfg, cfg.seed(), w).expect("build").run().expect("run");
    Traces {
        rlc: m.rlc.contents(),
        mac: m.mac.contents(),
        dc: m.dc.contents(),
        channel: m.channel.contents(),
    }
}

/// Rows as column-name maps.
fn rows(csv_text: &str) -> Vec<BTreeMap<String, String>> {
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    lines
        .map(|l| {
            // the dc detail column is last and may itself hold commas
            let fields: Vec<&str> = l.splitn(header.len(), ',').collect();
            header.iter().map(|h| h.to_string()).zip(fields.iter().map(|f| f.to_string())).collect()
        })
        .collect()
}

fn handover_oracle() -> Outcome {
    let pts = points(&scenario("dc-handover.toml"));
    let mut pass = true;
    let mut parts = Vec::new();
    for v in ["am-lossless", "um-seamless"] {
        let (_, cfg) = &pts[v][0];
        let t = traced(cfg);
        let rlc = rows(&t.rlc);
        let sns: Vec<u64> = rlc
            .iter()
            .filter(|r| r["leg"] == "PDCP" && r["event"] == "deliver")
            .map(|r| r["sn"].parse().expect("sn"))
            .collect();
        let discards = rlc.iter().filter(|r| r["event"] == "discard").count();
        let handovers = rows(&t.dc).iter().filter(|r| r["event"] == "HO_DONE").count();
        let increasing = sns.windows(2).all(|w| w[1] > w[0]);
        let mut distinct = sns.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let duplicates = sns.len() - distinct.len();
        let span = distinct.last().map_or(0, |l| l - distinct[0] + 1) as usize;
        let gaps = span - distinct.len();
        let ok = handovers == 1
            && sns.len() >= HANDOVER_MIN_SNS
            && match v {
                "am-lossless" => gaps == 0 && duplicates == 0 && distinct[0] == 0,
                _ => increasing && gaps == discards,
            };
        pass &= ok;
        parts.push(format!(
            "{v}: {} SNs, {handovers} handover, gaps {gaps}, duplicates {duplicates}, source discards {discards}, increasing {increasing}",
            sns.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn fallback_exclusivity() -> Outcome {
    let cfg = scenario("dc-fallback.toml").expand().expect("valid").remove(0).config;
    let t = traced(&cfg);
    let dc = rows(&t.dc);
    // mode intervals from the dc trace; the UE starts on mmWave
    let mut switches: Vec<(i64, bool)> = vec![(i64::MIN, false)];
    let mut fallbacks = 0;
    let mut recoveries = 0;
    for r in &dc {
        let at: i64 = r["time_us"].parse().expect("time");
        match r["event"].as_str() {
            "FALLBACK" => {
                fallbacks += 1;
                switches.push((at, true));
            }
            "RECOVERY" => {
                recoveries += 1;
                switches.push((at, false));
            }
            _ => {}
        }
    }
    let mode_at = |t: i64| -> Option<bool> {
        // None on a switching instant, where either leg may legitimately act
        if switches.iter().any(|(s, _)| *s == t) {
            return None;
        }
        switches.iter().rev().find(|(s, _)| *s < t).map(|(_, fb)| *fb)
    };
    let (mut mmw_in_fallback, mut lte_in_active, mut mmw_rows, mut lte_rows) = (0, 0, 0, 0);
    for r in rows(&t.mac) {
        if !matches!(r["outcome"].as_str(), "ACK" | "NACK" | "DROP") {
            continue;
        }
        let at: i64 = r["time_us"].parse().expect("time");
        let lte = r["rat"] == "LTE";
        if lte {
            lte_rows += 1;
        } else {
            mmw_rows += 1;
        }
        match (mode_at(at), lte) {
            (Some(true), false) => mmw_in_fallback += 1,
            (Some(false), true) => lte_in_active += 1,
            _ => {}
        }
    }
    let known = ["MEAS", "CTRL", "FALLBACK", "RECOVERY", "HO_TRIGGER", "HO_DONE"];
    let core_events = dc
        .iter()
        .filter(|r| !known.contains(&r["event"].as_str()) || r["detail"].contains("MME") || r["detail"].contains("S1"))
        .count();
    let pass = fallbacks >= 1
        && recoveries >= 1
        && mmw_in_fallback == 0
        && lte_in_active == 0
        && lte_rows > 0
        && mmw_rows > 0
        && core_events == 0;
    outcome(
        pass,
        format!(
            "{fallbacks} fallback / {recoveries} recovery; mmWave data TBs in fallback {mmw_in_fallback}, LTE data TBs while mmWave active {lte_in_active} (of {mmw_rows}/{lte_rows}); core-network events {core_events}"
        ),
    )
}

fn determinism() -> Outcome {
    let pts = points(&scenario("ca-same-bandwidth.toml"));
    let (_, base) = pts["contiguous-2cc"]
        .iter()
        .find(|(d, _)| *d == Some(100.0))
        .expect("100 m point")
        .clone();
    let mut cfg = base;
    cfg.duration_s = 0.3;
    cfg.trace.channel = true;
    let a = traced(&cfg);
    let b = traced(&cfg);
    let same = a.mac == b.mac && a.rlc == b.rlc && a.dc == b.dc && a.channel == b.channel;

    let mut blocked = cfg.clone();
    blocked.blockage.insert("cc1".into(), true);
    let c = traced(&blocked);
    let cc0 = |text: &str| -> Vec<String> {
        text.lines()
            .skip(1)
            .filter(|l| l.split(',').nth(1) == Some("0"))
            .map(str::to_string)
            .collect()
    };
    let cc0_same = cc0(&a.channel) == cc0(&c.channel);
    let cc1_changed = a.channel != c.channel;
    outcome(
        same && cc0_same && cc1_changed,
        format!(
            "repeat run byte-identical: {same}; cc0 channel trace unchanged by cc1 blockage: {cc0_same} ({} rows); cc1 trace changed: {cc1_changed}",
            cc0(&a.channel).len()
        ),
    )
}

fn micro_oracles() -> Outcome {
    // 10 log10((1 + 100) / 2)
    let expected_sinr = 10.0 * (101.0f64 / 2.0).log10();
    let sinr: f64 = wideband_sinr(&[0.0, 20.0]).expect("non-empty");
    let sinr_ok = (sinr - 17.03).abs() <= WIDEBAND_ORACLE_TOL_DB && (sinr - expected_sinr).abs() < 1e-9;

    let split = largest_remainder_split(100, &[889, 111]);
    let split_ok = split == vec![89, 11];

    // 12 500 bytes at 1 Gbit/s take 100 us; 1 ms latency on top
    let mut link = X2Link::new(1e-3, 1e9).expect("link");
    let first = x2_deliver(&mut link, 12_500, 0.0);
    let second = x2_deliver(&mut link, 12_500, 0.0);
    let third = x2_deliver(&mut link, 1_250, 0.5);
    let x2_ok = (first - 1.1e-3).abs() < X2_TOL_S && (second - 1.2e-3).abs() < X2_TOL_S && (third - 0.50101).abs() < X2_TOL_S;

    outcome(
        sinr_ok && split_ok && x2_ok,
        format!(
            "wideband_sinr([0,20]) = {sinr:.4} dB; split(100, 889:111) = {split:?}; x2 arrivals {:.1}/{:.1}/{:.2} us",
            first * 1e6,
            second * 1e6,
            third * 1e6
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("micro-oracles", micro_oracles()));
    let sb = same_bandwidth();
    results.push(("ca-gain", ca_gain(&sb)));
    results.push(("monotonicity", monotonicity(&sb)));
    results.push(("blockage-robustness", blockage_robustness(&sb)));
    results.push(("bandwidth-ratio-trend", bandwidth_ratio_trend()));
    results.push(("conservation", conservation(&sb)));
    results.push(("handover-oracle", handover_oracle()));
    results.push(("fallback-exclusivity", fallback_exclusivity()));
    results.push(("determinism", determinism()));

    let mut failed = 0;
    println!();
    for (name, o) in &results {
        println!("acceptance {name:<26} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
