use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::ca::CcManagerPolicy;
use crate::channel::{CarrierConfig, ChannelParams, Rat};
use crate::dc::DcParams;
use crate::error::{Error, Result};
use crate::mac::MacParams;
use crate::rlc::{RlcMode, RoutingPolicy};

/// Where UEs start.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    Fixed {
        distance_m: f64,
        #[serde(default)]
        angle_deg: f64,
    },
    /// Distance uniform in `[min_distance_m, max_distance_m]`, angle uniform.
    Uniform {
        max_distance_m: f64,
        #[serde(default)]
        min_distance_m: f64,
    },
}

impl Default for Placement {
    fn default() -> Self {
        Placement::Fixed {
            distance_m: 100.0,
            angle_deg: 0.0,
        }
    }
}

fn default_speed() -> f64 {
    1.0
}
fn default_epoch() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mobility {
    #[default]
    Static,
    RandomWalk {
        #[serde(default = "default_speed")]
        speed_mps: f64,
        #[serde(default = "default_epoch")]
        epoch_s: f64,
        /// Radius of the reflective disc around the origin; defaults to the
        /// placement range.
        #[serde(default)]
        bounds_m: Option<f64>,
    },
}

fn default_packet() -> u32 {
    1500
}
fn default_window() -> u64 {
    2_000_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Traffic {
    /// Always backlogged. With UM/AM the source keeps `window_bytes` of
    /// undelivered PDCP data outstanding.
    FullBuffer {
        #[serde(default = "default_window")]
        window_bytes: u64,
        #[serde(default = "default_packet")]
        packet_bytes: u32,
    },
    Cbr {
        rate_bps: f64,
        #[serde(default = "default_packet")]
        packet_bytes: u32,
    },
}

impl Default for Traffic {
    fn default() -> Self {
        Traffic::FullBuffer {
            window_bytes: default_window(),
            packet_bytes: default_packet(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub id: u32,
    #[serde(default)]
    pub position: [f64; 2],
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub routing_policy: RoutingPolicy,
    pub lte_carrier: Option<CarrierConfig>,
    #[serde(default)]
    pub lte_position: [f64; 2],
    pub mmwave_cells: Vec<CellConfig>,
    #[serde(default)]
    pub params: DcParams,
}

fn default_outage_loss() -> f64 {
    60.0
}

/// Scripted interventions.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptEvent {
    Handover {
        at_s: f64,
        #[serde(default)]
        ue_id: u32,
        target_cell: u32,
    },
    /// Extra loss on every carrier of the listed mmWave cells (all if empty).
    Outage {
        start_s: f64,
        end_s: f64,
        #[serde(default)]
        cells: Vec<u32>,
        #[serde(default = "default_outage_loss")]
        loss_db: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconfigurationEvent {
    pub at_s: f64,
    #[serde(default)]
    pub ue_id: u32,
    pub carriers: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub mac: bool,
    pub rlc: bool,
    pub dc: bool,
    pub channel: bool,
    /// Emit BSR, HARQ-feedback and measurement rows in the MAC trace.
    pub control_rows: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            mac: true,
            rlc: true,
            dc: true,
            channel: true,
            control_rows: true,
        }
    }
}

fn one() -> u32 {
    1
}
fn default_reconf_delay() -> f64 {
    0.01
}
fn default_saturation() -> u64 {
    10_000_000
}

/// One runnable experiment point.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub duration_s: f64,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "one")]
    pub n_runs: u32,
    #[serde(default = "one")]
    pub n_ues: u32,
    pub carriers: Vec<CarrierConfig>,
    /// Carriers configured at attach; all when absent.
    #[serde(default)]
    pub initial_carriers: Option<Vec<u8>>,
    #[serde(default)]
    pub cc_manager: CcManagerPolicy,
    #[serde(default = "default_reconf_delay")]
    pub reconfiguration_delay_s: f64,
    #[serde(default)]
    pub rlc_mode: RlcMode,
    #[serde(default = "default_saturation")]
    pub sm_saturation_bytes: u64,
    #[serde(default)]
    pub channel: ChannelParams,
    /// Carriers with blockage enabled, keyed `cc<N>`.
    #[serde(default)]
    pub blockage: BTreeMap<String, bool>,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default)]
    pub mobility: Mobility,
    #[serde(default)]
    pub traffic: Traffic,
    #[serde(default)]
    pub mac: MacParams,
    #[serde(default)]
    pub dc: Option<DcConfig>,
    #[serde(default)]
    pub reconfigurations: Vec<ReconfigurationEvent>,
    #[serde(default)]
    pub script: Vec<ScriptEvent>,
    #[serde(default)]
    pub trace: TraceConfig,
}

pub const DEFAULT_SEED: u64 = 1;

impl ScenarioConfig {
    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn dc_enabled(&self) -> bool {
        self.dc.as_ref().is_some_and(|d| d.enabled)
    }

    pub fn blockage_enabled(&self, cc_id: u8) -> bool {
        self.blockage.get(&format!("cc{cc_id}")).copied().unwrap_or(false)
    }

    /// Bandwidth ratio of the second to the first carrier.
    pub fn r_cc(&self) -> Option<f64> {
        match self.carriers.as_slice() {
            [a, b] => Some(b.bandwidth_mhz / a.bandwidth_mhz),
            _ => None,
        }
    }

    pub fn total_bandwidth_mhz(&self) -> f64 {
        self.carriers.iter().map(|c| c.bandwidth_mhz).sum()
    }

    /// Every semantic violation in the config.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.duration_s > 0.0) {
            v.push(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if self.n_runs == 0 {
            v.push("n_runs must be at least 1".into());
        }
        if self.n_ues == 0 {
            v.push("n_ues must be at least 1".into());
        }
        if self.carriers.is_empty() {
            v.push("at least one carrier is required".into());
        }
        for c in &self.carriers {
            if c.rat != Rat::Mmwave {
                v.push(format!("cc{} in `carriers` must be a mmwave carrier", c.cc_id));
            }
            v.extend(c.violations());
        }
        check_carrier_set(&self.carriers, "carriers", &mut v);
        if self.cc_manager == CcManagerPolicy::Noop && self.carriers.len() > 1 {
            v.push("cc_manager `noop` supports a single carrier".into());
        }
        if let Some(init) = &self.initial_carriers {
            for id in init {
                if !self.carriers.iter().any(|c| c.cc_id == *id) {
                    v.push(format!("initial_carriers lists unknown cc{id}"));
                }
            }
            if let Some(p) = self.carriers.iter().find(|c| c.is_primary) {
                if !init.contains(&p.cc_id) {
                    v.push("initial_carriers must include the primary carrier".into());
                }
            }
        }
        for key in self.blockage.keys() {
            let known = key
                .strip_prefix("cc")
                .and_then(|n| n.parse::<u8>().ok())
                .is_some_and(|id| self.carriers.iter().any(|c| c.cc_id == id));
            if !known {
                v.push(format!("blockage map key `{key}` does not name a configured carrier"));
            }
        }
        if !(self.reconfiguration_delay_s >= 0.0) {
            v.push("reconfiguration_delay_s must be non-negative".into());
        }
        let ch = &self.channel;
        for (name, x) in [
            ("channel.update_period_s", ch.update_period_s),
            ("channel.los_update_period_s", ch.los_update_period_s),
            ("channel.fading.period_s", ch.fading.period_s),
            ("channel.blockage.mean_blocked_s", ch.blockage.mean_blocked_s),
            ("channel.blockage.mean_free_s", ch.blockage.mean_free_s),
        ] {
            if !(x > 0.0) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        }
        if self.mac.harq_max_attempts == 0 || self.mac.harq_processes == 0 {
            v.push("mac.harq_max_attempts and mac.harq_processes must be at least 1".into());
        }
        match self.placement {
            Placement::Fixed { distance_m, .. } if !(distance_m >= 0.0) => {
                v.push(format!("placement.distance_m must be non-negative, got {distance_m}"))
            }
            Placement::Uniform {
                max_distance_m,
                min_distance_m,
            } if !(min_distance_m >= 0.0 && max_distance_m > min_distance_m) => v.push(format!(
                "uniform placement needs 0 <= min_distance_m < max_distance_m, got [{min_distance_m}, {max_distance_m}]"
            )),
            _ => {}
        }
        if let Mobility::RandomWalk {
            speed_mps,
            epoch_s,
            bounds_m,
        } = self.mobility
        {
            if !(speed_mps >= 0.0) {
                v.push("mobility.speed_mps must be non-negative".into());
            }
            if !(epoch_s > 0.0) {
                v.push("mobility.epoch_s must be positive".into());
            }
            if bounds_m.is_some_and(|b| !(b > 0.0)) {
                v.push("mobility.bounds_m must be positive".into());
            }
        }
        match self.traffic {
            Traffic::Cbr {
                rate_bps,
                packet_bytes,
            } => {
                if !(rate_bps > 0.0) || packet_bytes == 0 {
                    v.push("cbr traffic needs rate_bps > 0 and packet_bytes > 0".into());
                }
                if self.rlc_mode == RlcMode::Sm {
                    v.push("cbr traffic needs rlc_mode `um` or `am`; `sm` is always saturated".into());
                }
            }
            Traffic::FullBuffer {
                window_bytes,
                packet_bytes,
            } => {
                if window_bytes == 0 || packet_bytes == 0 {
                    v.push("full_buffer traffic needs window_bytes > 0 and packet_bytes > 0".into());
                }
            }
        }
        for (i, r) in self.reconfigurations.iter().enumerate() {
            if !(r.at_s >= 0.0) {
                v.push(format!("reconfigurations[{i}].at_s must be non-negative"));
            }
            if r.ue_id >= self.n_ues {
                v.push(format!("reconfigurations[{i}] names unknown UE {}", r.ue_id));
            }
            for id in &r.carriers {
                if !self.carriers.iter().any(|c| c.cc_id == *id) {
                    v.push(format!("reconfigurations[{i}] lists unknown cc{id}"));
                }
            }
            if let Some(p) = self.carriers.iter().find(|c| c.is_primary) {
                if !r.carriers.contains(&p.cc_id) {
                    v.push(format!("reconfigurations[{i}] must keep the primary cc{}", p.cc_id));
                }
            }
        }
        let cell_ids: Vec<u32> = match &self.dc {
            Some(dc) if dc.enabled => dc.mmwave_cells.iter().map(|c| c.id).collect(),
            _ => vec![0],
        };
        for (i, s) in self.script.iter().enumerate() {
            match s {
                ScriptEvent::Handover {
                    at_s,
                    ue_id,
                    target_cell,
                } => {
                    if !self.dc_enabled() {
                        v.push(format!("script[{i}]: handovers need dual connectivity"));
                    }
                    if !(*at_s >= 0.0) {
                        v.push(format!("script[{i}].at_s must be non-negative"));
                    }
                    if *ue_id >= self.n_ues {
                        v.push(format!("script[{i}] names unknown UE {ue_id}"));
                    }
                    if !cell_ids.contains(target_cell) {
                        v.push(format!("script[{i}] targets unknown cell {target_cell}"));
                    }
                }
                ScriptEvent::Outage {
                    start_s, end_s, cells, ..
                } => {
                    if !(*start_s >= 0.0 && end_s > start_s) {
                        v.push(format!("script[{i}]: outage needs 0 <= start_s < end_s"));
                    }
                    for c in cells {
                        if !cell_ids.contains(c) {
                            v.push(format!("script[{i}] names unknown cell {c}"));
                        }
                    }
                }
            }
        }
        if let Some(dc) = self.dc.as_ref().filter(|d| d.enabled) {
            if self.rlc_mode == RlcMode::Sm {
                v.push("dual connectivity needs rlc_mode `um` or `am`".into());
            }
            match &dc.lte_carrier {
                None => v.push("dual connectivity needs an LTE carrier (dc.lte_carrier)".into()),
                Some(l) => {
                    if l.rat != Rat::Lte {
                        v.push("dc.lte_carrier must have rat = \"lte\"".into());
                    }
                    v.extend(l.violations());
                }
            }
            if dc.mmwave_cells.is_empty() {
                v.push("dual connectivity needs at least one mmWave cell".into());
            }
            let mut ids: Vec<u32> = dc.mmwave_cells.iter().map(|c| c.id).collect();
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                v.push("dc.mmwave_cells ids must be unique".into());
            }
            if ids.contains(&super::LTE_CELL_ID) {
                v.push(format!("cell id {} is reserved for the LTE anchor", super::LTE_CELL_ID));
            }
            if let RoutingPolicy::Split { weight } = dc.routing_policy {
                if !(0.0..=1.0).contains(&weight) {
                    v.push(format!("split weight must be in [0, 1], got {weight}"));
                }
            }
            v.extend(dc.params.violations());
        }
        v
    }

    /// Checks the config, returning warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        let mut warnings = Vec::new();
        if self.master_seed.is_none() {
            warnings.push(format!("no master_seed given; using {DEFAULT_SEED}"));
        }
        Ok(warnings)
    }
}

fn check_carrier_set(carriers: &[CarrierConfig], what: &str, v: &mut Vec<String>) {
    let primaries = carriers.iter().filter(|c| c.is_primary).count();
    if !carriers.is_empty() && primaries != 1 {
        v.push(format!("{what}: exactly one carrier must be primary, found {primaries}"));
    }
    for (i, a) in carriers.iter().enumerate() {
        for b in &carriers[i + 1..] {
            if a.cc_id == b.cc_id {
                v.push(format!("{what}: duplicate cc_id {}", a.cc_id));
            }
            if a.overlaps(b) {
                let (a0, a1) = a.spectrum_ghz();
                let (b0, b1) = b.spectrum_ghz();
                v.push(format!(
                    "{what}: cc{} [{a0:.4}, {a1:.4}] GHz overlaps cc{} [{b0:.4}, {b1:.4}] GHz",
                    a.cc_id, b.cc_id
                ));
            }
        }
    }
}

const POLICY_NAMES: [&str; 3] = ["noop", "round_robin", "bandwidth_aware"];
const RLC_MODES: [&str; 3] = ["sm", "um", "am"];

/// Name checks done on the raw table so they are reported together with the
/// semantic violations. Offending keys are removed so parsing can continue.
fn check_names(table: &mut toml::Table, v: &mut Vec<String>) {
    for (key, allowed) in [("cc_manager", &POLICY_NAMES[..]), ("rlc_mode", &RLC_MODES[..])] {
        let bad = match table.get(key) {
            Some(val) if !val.as_str().is_some_and(|s| allowed.contains(&s)) => {
                v.push(format!("unknown {key} {val}; expected one of {}", allowed.join(", ")));
                true
            }
            _ => false,
        };
        if bad {
            table.remove(key);
        }
    }
}

/// Recursive merge: tables merge key by key, anything else is replaced.
fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, val) in over {
        match (base.get_mut(k), val) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), val.clone());
            }
        }
    }
}

fn table_to_config(mut table: toml::Table) -> Result<ScenarioConfig> {
    let mut v = Vec::new();
    check_names(&mut table, &mut v);
    match toml::Value::Table(table).try_into::<ScenarioConfig>() {
        Ok(cfg) => {
            v.extend(cfg.violations());
            if v.is_empty() {
                Ok(cfg)
            } else {
                Err(Error::Validation(v))
            }
        }
        Err(e) => {
            v.push(e.message().to_string());
            Err(Error::Validation(v))
        }
    }
}

/// One expanded point of a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPoint {
    /// `variant`, `d<distance>` or `variant/d<distance>`; empty for a plain
    /// single-config file.
    pub label: String,
    pub variant: Option<String>,
    pub distance_m: Option<f64>,
    pub config: ScenarioConfig,
}

/// A scenario file: a base config plus optional `[[variants]]` (merged over
/// the base) and a `[sweep]` over `distance_m`.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    base: toml::Table,
    variants: Vec<(String, toml::Table)>,
    distances: Vec<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut base: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut variants = Vec::new();
        if let Some(val) = base.remove("variants") {
            let arr = val
                .as_array()
                .ok_or_else(|| Error::config("`variants` must be an array of tables"))?;
            for (i, item) in arr.iter().enumerate() {
                let mut t = item
                    .as_table()
                    .cloned()
                    .ok_or_else(|| Error::config(format!("variants[{i}] must be a table")))?;
                let name = match t.remove("name") {
                    Some(toml::Value::String(s)) => s,
                    _ => return Err(Error::config(format!("variants[{i}] needs a string `name`"))),
                };
                variants.push((name, t));
            }
        }
        let mut distances = Vec::new();
        if let Some(val) = base.remove("sweep") {
            let t = val.as_table().ok_or_else(|| Error::config("`sweep` must be a table"))?;
            for (k, x) in t {
                if k != "distance_m" {
                    return Err(Error::config(format!("unknown sweep key `{k}`")));
                }
                let arr = x
                    .as_array()
                    .ok_or_else(|| Error::config("sweep.distance_m must be an array"))?;
                for d in arr {
                    distances.push(
                        d.as_float()
                            .or_else(|| d.as_integer().map(|i| i as f64))
                            .ok_or_else(|| Error::config("sweep.distance_m entries must be numbers"))?,
                    );
                }
            }
        }
        Ok(ScenarioFile {
            base,
            variants,
            distances,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn variant_names(&self) -> Vec<&str> {
        self.variants.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// All (variant, distance) points, each validated. Violations of every
    /// point are collected.
    pub fn expand(&self) -> Result<Vec<ExperimentPoint>> {
        let variants: Vec<(Option<&str>, toml::Table)> = if self.variants.is_empty() {
            vec![(None, self.base.clone())]
        } else {
            self.variants
                .iter()
                .map(|(n, t)| {
                    let mut b = self.base.clone();
                    merge(&mut b, t);
                    (Some(n.as_str()), b)
                })
                .collect()
        };
        let distances: Vec<Option<f64>> = if self.distances.is_empty() {
            vec![None]
        } else {
            self.distances.iter().copied().map(Some).collect()
        };
        let mut points = Vec::new();
        let mut errors = Vec::new();
        for (variant, table) in &variants {
            for &d in &distances {
                let mut t = table.clone();
                if let Some(d) = d {
                    let mut p = toml::Table::new();
                    p.insert("kind".into(), "fixed".into());
                    p.insert("distance_m".into(), d.into());
                    t.insert("placement".into(), toml::Value::Table(p));
                }
                let label = match (variant, d) {
                    (Some(v), Some(d)) => format!("{v}/d{d}"),
                    (Some(v), None) => v.to_string(),
                    (None, Some(d)) => format!("d{d}"),
                    (None, None) => String::new(),
                };
                match table_to_config(t) {
                    Ok(mut config) => {
                        if config.name.is_empty() {
                            config.name = label.clone();
                        }
                        points.push(ExperimentPoint {
                            label,
                            variant: variant.map(str::to_string),
                            distance_m: d,
                            config,
                        })
                    }
                    Err(Error::Validation(v)) if label.is_empty() => errors.extend(v),
                    Err(Error::Validation(v)) => errors.extend(v.into_iter().map(|m| format!("[{label}] {m}"))),
                    Err(e) => return Err(e),
                }
            }
        }
        if errors.is_empty() {
            Ok(points)
        } else {
            Err(Error::Validation(errors))
        }
    }
}

/// Parses a single-point config; files with variants or sweeps must go
/// through [`ScenarioFile::expand`].
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let file = ScenarioFile::load(path)?;
    parse_single(file)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    parse_single(ScenarioFile::parse(text)?)
}

fn parse_single(file: ScenarioFile) -> Result<ScenarioConfig> {
    let mut points = file.expand()?;
    if points.len() != 1 {
        return Err(Error::config(format!(
            "file describes {} experiment points; expand it instead",
            points.len()
        )));
    }
    Ok(points.remove(0).config)
}
