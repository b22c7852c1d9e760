use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Mean over runs and its 95% Student-t half-width (absent for one run).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: Option<f64>,
}

pub fn estimate(samples: &[f64]) -> Estimate {
    let n = samples.len();
    if n == 0 {
        return Estimate { mean: 0.0, ci95: None };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate { mean, ci95: None };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Estimate {
        mean,
        ci95: Some(t * (var / n as f64).sqrt()),
    }
}

/// Metrics of a single run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub s_rlc_bps: f64,
    /// Keyed `cc<N>` for mmWave carriers and `lte_cc<N>` for LTE.
    pub per_cc_mac_bps: BTreeMap<String, f64>,
    pub handover_count: f64,
    pub fallback_time_fraction: f64,
}

impl RunMetrics {
    pub fn total_mac_bps(&self) -> f64 {
        self.per_cc_mac_bps.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryMetrics {
    pub n_runs: usize,
    pub s_rlc_bps: Estimate,
    pub per_cc_mac_bps: BTreeMap<String, Estimate>,
    pub handover_count: Estimate,
    pub fallback_time_fraction: Estimate,
}

impl SummaryMetrics {
    pub fn from_runs(runs: &[RunMetrics]) -> Self {
        let col = |f: &dyn Fn(&RunMetrics) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        let keys: std::collections::BTreeSet<&String> = runs.iter().flat_map(|r| r.per_cc_mac_bps.keys()).collect();
        SummaryMetrics {
            n_runs: runs.len(),
            s_rlc_bps: estimate(&col(&|r| r.s_rlc_bps)),
            per_cc_mac_bps: keys
                .into_iter()
                .map(|k| {
                    let v = col(&|r| r.per_cc_mac_bps.get(k).copied().unwrap_or(0.0));
                    (k.clone(), estimate(&v))
                })
                .collect(),
            handover_count: estimate(&col(&|r| r.handover_count)),
            fallback_time_fraction: estimate(&col(&|r| r.fallback_time_fraction)),
        }
    }

    /// `(metric, estimate, unit)` in output order.
    pub fn rows(&self) -> Vec<(String, Estimate, &'static str)> {
        let mut rows = vec![("s_rlc_bps".to_string(), self.s_rlc_bps, "bps")];
        for (k, e) in &self.per_cc_mac_bps {
            rows.push((format!("mac_{k}_bps"), *e, "bps"));
        }
        rows.push(("handover_count".into(), self.handover_count, "count"));
        rows.push(("fallback_time_fraction".into(), self.fallback_time_fraction, "fraction"));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,mean,ci95,unit\n");
        for (m, e, unit) in self.rows() {
            match e.ci95 {
                Some(c) => s.push_str(&format!("{m},{},{},{unit}\n", e.mean, c)),
                None => s.push_str(&format!("{m},{},,{unit}\n", e.mean)),
            }
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

struct Rows {
    name: String,
    reader: csv::Reader<Box<dyn Read>>,
    cols: HashMap<String, usize>,
}

impl Rows {
    fn new(name: &str, input: Box<dyn Read>, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(input);
        let headers = reader.headers().map_err(|e| trace_err(name, 1, e.to_string()))?.clone();
        let cols: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        for r in required {
            if !cols.contains_key(*r) {
                return Err(trace_err(name, 1, format!("missing column `{r}`")));
            }
        }
        Ok(Rows {
            name: name.to_string(),
            reader,
            cols,
        })
    }

    /// Calls `f(line, row)` for every record.
    fn each(mut self, mut f: impl FnMut(u64, &Row<'_>) -> Result<(), String>) -> Result<()> {
        let mut rec = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut rec).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                trace_err(&self.name, line, e.to_string())
            })?;
            if !more {
                return Ok(());
            }
            let line = rec.position().map_or(0, |p| p.line());
            let row = Row {
                rec: &rec,
                cols: &self.cols,
            };
            f(line, &row).map_err(|m| trace_err(&self.name, line, m))?;
        }
    }
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    cols: &'a HashMap<String, usize>,
}

impl Row<'_> {
    fn get(&self, col: &str) -> &str {
        self.rec.get(self.cols[col]).unwrap_or("")
    }
}

fn trace_err(name: &str, line: u64, message: String) -> Error {
    Error::Trace {
        path: name.to_string(),
        line,
        message,
    }
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {what} `{s}`"))
}

/// One run's traces, as named readers.
pub struct RunTraces {
    pub mac: (String, Box<dyn Read>),
    pub rlc: (String, Box<dyn Read>),
    pub dc: Option<(String, Box<dyn Read>)>,
}

impl RunTraces {
    pub fn from_strings(mac: String, rlc: String, dc: String) -> Self {
        RunTraces {
            mac: ("mac".into(), Box::new(std::io::Cursor::new(mac))),
            rlc: ("rlc".into(), Box::new(std::io::Cursor::new(rlc))),
            dc: Some(("dc".into(), Box::new(std::io::Cursor::new(dc)))),
        }
    }
}

/// Recomputes a run's metrics from its MAC, RLC and DC traces.
pub fn run_metrics_from_traces(traces: RunTraces, duration_s: f64, n_ues: u32) -> Result<RunMetrics> {
    let mut m = RunMetrics::default();
    let mut acked: BTreeMap<String, u64> = BTreeMap::new();
    Rows::new(&traces.mac.0, traces.mac.1, &["cc_id", "tb_bytes", "outcome", "rat"])?.each(|_, row| {
        let key = match row.get("rat") {
            "LTE" => format!("lte_cc{}", row.get("cc_id")),
            _ => format!("cc{}", row.get("cc_id")),
        };
        let entry = acked.entry(key).or_default();
        if row.get("outcome") == "ACK" {
            *entry += num::<u64>(row.get("tb_bytes"), "tb_bytes")?;
        }
        Ok(())
    })?;
    let mut delivered = 0u64;
    Rows::new(&traces.rlc.0, traces.rlc.1, &["leg", "event", "bytes"])?.each(|_, row| {
        if row.get("event") == "deliver" && row.get("leg") != "PDCP" {
            delivered += num::<u64>(row.get("bytes"), "bytes")?;
        }
        Ok(())
    })?;
    let mut handovers = 0u64;
    let mut fallback_us = 0i64;
    if let Some((name, input)) = traces.dc {
        let mut since: BTreeMap<u32, i64> = BTreeMap::new();
        Rows::new(&name, input, &["time_us", "ue_id", "event"])?.each(|_, row| {
            let t: i64 = num(row.get("time_us"), "time_us")?;
            let ue: u32 = num(row.get("ue_id"), "ue_id")?;
            match row.get("event") {
                "HO_DONE" => handovers += 1,
                "FALLBACK" => {
                    since.entry(ue).or_insert(t);
                }
                "RECOVERY" => {
                    if let Some(s) = since.remove(&ue) {
                        fallback_us += t - s;
                    }
                }
                _ => {}
            }
            Ok(())
        })?;
        let end = super::trace::time_us(duration_s);
        fallback_us += since.values().map(|s| end - s).sum::<i64>();
    }
    m.s_rlc_bps = delivered as f64 * 8.0 / duration_s;
    m.per_cc_mac_bps = acked
        .into_iter()
        .map(|(k, b)| (k, b as f64 * 8.0 / duration_s))
        .collect();
    m.handover_count = handovers as f64;
    m.fallback_time_fraction = fallback_us as f64 * 1e-6 / (duration_s * n_ues as f64);
    Ok(m)
}

fn run_files(dir: &Path) -> Result<BTreeMap<u32, PathBuf>> {
    let mut runs = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(k) = name
            .strip_prefix("run-")
            .and_then(|r| r.strip_suffix("-mac.csv"))
            .and_then(|k| k.parse::<u32>().ok())
        {
            runs.insert(k, dir.to_path_buf());
        }
    }
    Ok(runs)
}

fn open(path: PathBuf) -> Result<(String, Box<dyn Read>)> {
    let f = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path.display().to_string(), Box::new(std::io::BufReader::new(f))))
}

/// Summary over every `run-<k>-*.csv` set in `dir`, in run-index order.
pub fn summarize(dir: impl AsRef<Path>, duration_s: f64, n_ues: u32) -> Result<SummaryMetrics> {
    let dir = dir.as_ref();
    let mut runs = Vec::new();
    for (k, d) in run_files(dir)? {
        let dc_path = d.join(format!("run-{k}-dc.csv"));
        let traces = RunTraces {
            mac: open(d.join(format!("run-{k}-mac.csv")))?,
            rlc: open(d.join(format!("run-{k}-rlc.csv")))?,
            dc: if dc_path.exists() { Some(open(dc_path)?) } else { None },
        };
        runs.push(run_metrics_from_traces(traces, duration_s, n_ues)?);
    }
    Ok(SummaryMetrics::from_runs(&runs))
}
