use std::collections::{BTreeMap, BTreeSet};

use super::config::{Mobility, Placement, ScenarioConfig, ScriptEvent, Traffic};
use super::mobility::{walk_step, MobilityState};
use super::summary::RunMetrics;
use super::trace::TraceWriter;
use super::LTE_CELL_ID;
use crate::ca::{BufferStatusReport, CarrierSet, CcManager, CcManagerPolicy, Reconfiguration};
use crate::channel::{los_probability, CarrierChannel, CarrierConfig, LinkGeometry, LosModel, Rat};
use crate::dc::{
    detect_outage_and_fallback, select_secondary, DcMode, DcParams, DcState, DcTransition, HandoverPlan,
    MeasurementFilter, MeasurementReport, Node, SignalMessage, X2Link,
};
use crate::error::{Error, Result};
use crate::mac::{transport_outcome, CarrierScheduler, FeedbackResult, FlowId, McsTable, TbOutcome};
use crate::rlc::{
    ForwardMode, Leg, PdcpPdu, ReceiveOutcome, RlcEntity, RlcEvent, RlcMode, RlcPdu, RouteDecision, RoutingPolicy,
    SplitBearer,
};
use crate::sim::{Engine, Event, EventTag, RngStream};

type TbPayload = Vec<RlcPdu>;

const TRAFFIC_TICK_S: f64 = 1e-4;

#[derive(Debug)]
enum Action {
    ChannelUpdate { k: u64 },
    Measurement { k: u64 },
    BsrRefresh { cell: u32, k: u64 },
    CarrierTick { cell: u32, cc: u8, k: u64 },
    HarqFeedback(Box<Feedback>),
    CbrArrival { ue: u32, k: u64 },
    TrafficTick { k: u64 },
    X2Arrival { cell: u32, pdu: PdcpPdu },
    ReorderTimer { ue: u32, generation: u64 },
    Signal { ue: u32, msg: SignalMessage },
    ScriptedHandover { ue: u32, target: u32 },
    HandoverForward { ue: u32 },
    HandoverComplete { ue: u32 },
    Reconfigure { index: usize },
    ApplyReconfiguration { cell: u32, reconf: Reconfiguration },
    Outage { cells: Vec<u32>, loss_db: f64 },
}

#[derive(Debug)]
struct Feedback {
    cell: u32,
    cc: u8,
    flow: FlowId,
    pid: u8,
    generation: u64,
    outcome: TbOutcome,
}

impl EventTag for Action {
    fn tag(&self) -> &'static str {
        match self {
            Action::ChannelUpdate { .. } => "channel_update",
            Action::Measurement { .. } => "measurement",
            Action::BsrRefresh { .. } => "bsr_refresh",
            Action::CarrierTick { .. } => "carrier_tick",
            Action::HarqFeedback(_) => "harq_feedback",
            Action::CbrArrival { .. } => "cbr_arrival",
            Action::TrafficTick { .. } => "traffic_tick",
            Action::X2Arrival { .. } => "x2_arrival",
            Action::ReorderTimer { .. } => "reorder_timer",
            Action::Signal { .. } => "signal",
            Action::ScriptedHandover { .. } => "scripted_handover",
            Action::HandoverForward { .. } => "handover_forward",
            Action::HandoverComplete { .. } => "handover_complete",
            Action::Reconfigure { .. } => "reconfigure",
            Action::ApplyReconfiguration { .. } => "apply_reconfiguration",
            Action::Outage { .. } => "outage",
        }
    }
}

struct Cell {
    id: u32,
    rat: Rat,
    position: [f64; 2],
    primary_cc: u8,
    bsr_period_s: f64,
    schedulers: BTreeMap<u8, CarrierScheduler<TbPayload>>,
    manager: CcManager,
    rlc: BTreeMap<u32, RlcEntity>,
    serving: BTreeSet<u32>,
    bsr: BTreeMap<u8, BTreeMap<FlowId, BufferStatusReport>>,
    harq_rng: BTreeMap<(u8, u32), RngStream>,
}

struct DcCtx {
    state: DcState,
    filter: MeasurementFilter,
    last_report: Option<MeasurementReport>,
    plan: Option<HandoverPlan>,
    forwarded: bool,
    fallback_since: Option<f64>,
    fallback_time_s: f64,
}

struct Ue {
    id: u32,
    mobility: MobilityState,
    mobility_rng: RngStream,
    walking: bool,
    los: BTreeMap<u32, bool>,
    los_rng: BTreeMap<u32, RngStream>,
    next_los_update: f64,
    pdcp: Option<SplitBearer>,
    dc: Option<DcCtx>,
    serving_mmwave: Option<u32>,
}

/// Counters gathered while a run executes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub events: u64,
    pub rlc_delivered_bytes: u64,
    pub mac_acked_bytes: BTreeMap<String, u64>,
    pub handovers: u64,
    /// Transmitted PDUs the source dropped at a seamless handover.
    pub handover_discards: u64,
    /// SDUs lost inside RLC (UM after a HARQ drop, SM drops).
    pub rlc_losses: u64,
    pub pdcp_delivered: u64,
    pub pdcp_lost: u64,
    pub pdcp_duplicates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub stats: RunStats,
}

struct World {
    cfg: ScenarioConfig,
    seed: u64,
    dc_params: Option<DcParams>,
    policy: RoutingPolicy,
    cells: BTreeMap<u32, Cell>,
    mmwave_cells: Vec<u32>,
    ues: Vec<Ue>,
    channels: BTreeMap<(u32, u8, u32), CarrierChannel>,
    x2: BTreeMap<(u32, u32), X2Link>,
    trace: TraceWriter,
    stats: RunStats,
}

/// A fully built scenario, ready to run once.
pub struct Simulation {
    engine: Engine<Action>,
    world: World,
}

fn cc_key(rat: Rat, cc: u8) -> String {
    match rat {
        Rat::Lte => format!("lte_cc{cc}"),
        Rat::Mmwave => format!("cc{cc}"),
    }
}

fn antennas(rat: Rat, cfg: &ScenarioConfig) -> (u32, u32) {
    match rat {
        Rat::Lte => (1, 1),
        Rat::Mmwave => (cfg.channel.bs_antenna_elements, cfg.channel.ue_antenna_elements),
    }
}

fn draw_los(model: LosModel, d: f64, rng: &mut RngStream) -> bool {
    match model {
        LosModel::Los => true,
        LosModel::Nlos => false,
        LosModel::Probabilistic => rng.bernoulli(los_probability(d)),
    }
}

fn make_cell(id: u32, position: [f64; 2], carriers: &[CarrierConfig], policy: CcManagerPolicy, cfg: &ScenarioConfig) -> Result<Cell> {
    let set = CarrierSet::from_carriers(carriers.to_vec())?;
    let primary = set.primary_cc_id();
    let primary_cfg = carriers.iter().find(|c| c.cc_id == primary).expect("primary present");
    let schedulers = carriers
        .iter()
        .map(|c| (c.cc_id, CarrierScheduler::new(c.clone(), McsTable::default(), cfg.mac)))
        .collect();
    Ok(Cell {
        id,
        rat: primary_cfg.rat,
        position,
        primary_cc: primary,
        bsr_period_s: primary_cfg.subframe_duration_s(),
        schedulers,
        manager: CcManager::new(policy, cfg.reconfiguration_delay_s),
        rlc: BTreeMap::new(),
        serving: BTreeSet::new(),
        bsr: BTreeMap::new(),
        harq_rng: BTreeMap::new(),
    })
}

impl Simulation {
    /// Builds every cell, channel, scheduler, RLC/PDCP entity and DC
    /// controller for one run with `seed`.
    pub fn new(cfg: &ScenarioConfig, seed: u64, trace: TraceWriter) -> Result<Self> {
        let v = cfg.violations();
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        let dc_cfg = cfg.dc.as_ref().filter(|d| d.enabled);
        let mut cells = BTreeMap::new();
        let mut mmwave_cells = Vec::new();
        match dc_cfg {
            Some(dc) => {
                let lte = dc
                    .lte_carrier
                    .clone()
                    .ok_or_else(|| Error::config("dual connectivity needs an LTE carrier"))?;
                for c in &dc.mmwave_cells {
                    cells.insert(c.id, make_cell(c.id, c.position, &cfg.carriers, cfg.cc_manager, cfg)?);
                    mmwave_cells.push(c.id);
                }
                let mut lte = lte;
                lte.is_primary = true;
                cells.insert(
                    LTE_CELL_ID,
                    make_cell(LTE_CELL_ID, dc.lte_position, &[lte], CcManagerPolicy::Noop, cfg)?,
                );
            }
            None => {
                cells.insert(0, make_cell(0, [0.0, 0.0], &cfg.carriers, cfg.cc_manager, cfg)?);
                mmwave_cells.push(0);
            }
        }

        // carrier sets per UE
        let initial: Vec<CarrierConfig> = match &cfg.initial_carriers {
            Some(ids) => cfg.carriers.iter().filter(|c| ids.contains(&c.cc_id)).cloned().collect(),
            None => cfg.carriers.clone(),
        };
        for cell in cells.values_mut() {
            let set = if cell.rat == Rat::Lte {
                CarrierSet::from_carriers(cell.schedulers.values().map(|s| s.carrier().clone()).collect())?
            } else {
                CarrierSet::from_carriers(initial.clone())?
            };
            for ue in 0..cfg.n_ues {
                cell.manager.attach(ue, set.clone())?;
            }
        }

        let bounds = match (&cfg.placement, &cfg.mobility) {
            (_, Mobility::RandomWalk { bounds_m: Some(b), .. }) => *b,
            (Placement::Fixed { distance_m, .. }, _) => distance_m.max(1.0),
            (Placement::Uniform { max_distance_m, .. }, _) => *max_distance_m,
        };
        let dc_params = dc_cfg.map(|d| d.params.clone());
        let policy = dc_cfg.map_or(RoutingPolicy::MmwaveWithFallback, |d| d.routing_policy);
        let reorder = dc_params.as_ref().map_or(0.1, |p| p.reorder_timeout_s);

        let mut ues = Vec::new();
        for id in 0..cfg.n_ues {
            let mut prng = RngStream::new(&format!("placement/ue{id}"), seed);
            let position = match cfg.placement {
                Placement::Fixed { distance_m, angle_deg } => {
                    let a = angle_deg.to_radians();
                    [distance_m * a.cos(), distance_m * a.sin()]
                }
                Placement::Uniform {
                    max_distance_m,
                    min_distance_m,
                } => {
                    let d = prng.uniform_range(min_distance_m, max_distance_m);
                    let a = prng.uniform_range(0.0, std::f64::consts::TAU);
                    [d * a.cos(), d * a.sin()]
                }
            };
            let mut mobility_rng = RngStream::new(&format!("mobility/ue{id}"), seed);
            let (mobility, walking) = match cfg.mobility {
                Mobility::Static => (MobilityState::stationary(position), false),
                Mobility::RandomWalk { speed_mps, epoch_s, .. } => (
                    MobilityState::random_walk(position, speed_mps, epoch_s, bounds, &mut mobility_rng),
                    true,
                ),
            };
            let mut los = BTreeMap::new();
            let mut los_rng = BTreeMap::new();
            for cell in cells.values() {
                let mut r = RngStream::new(&format!("los/cell{}/ue{id}", cell.id), seed);
                los.insert(cell.id, draw_los(cfg.channel.los_model, mobility.distance_to(cell.position), &mut r));
                los_rng.insert(cell.id, r);
            }
            let pdcp = (cfg.rlc_mode != RlcMode::Sm).then(|| {
                let mut b = SplitBearer::new(id, policy, reorder);
                if dc_cfg.is_none() {
                    b.set_leg_available(Leg::Lte, false);
                }
                b
            });
            ues.push(Ue {
                id,
                mobility,
                mobility_rng,
                walking,
                los,
                los_rng,
                next_los_update: cfg.channel.los_update_period_s,
                pdcp,
                dc: dc_params.as_ref().map(|p| DcCtx {
                    state: DcState::new(id, LTE_CELL_ID),
                    filter: MeasurementFilter::new(p.ema_alpha),
                    last_report: None,
                    plan: None,
                    forwarded: false,
                    fallback_since: None,
                    fallback_time_s: 0.0,
                }),
                serving_mmwave: None,
            });
        }

        let mut channels = BTreeMap::new();
        for cell in cells.values() {
            let (bs, ue_ant) = antennas(cell.rat, cfg);
            for sched in cell.schedulers.values() {
                let carrier = sched.carrier();
                let blockage = cell.rat == Rat::Mmwave && cfg.blockage_enabled(carrier.cc_id);
                for ue in &ues {
                    let geom = LinkGeometry::new(ue.mobility.distance_to(cell.position), bs, ue_ant);
                    let ch = CarrierChannel::new(cell.id, ue.id, carrier, &cfg.channel, blockage, seed, &geom, ue.los[&cell.id])?;
                    channels.insert((cell.id, carrier.cc_id, ue.id), ch);
                }
            }
        }

        let mut x2 = BTreeMap::new();
        if let Some(p) = &dc_params {
            for &a in cells.keys() {
                for &b in cells.keys() {
                    if a != b {
                        x2.insert((a, b), X2Link::new(p.x2_latency_s, p.x2_datarate_bps)?);
                    }
                }
            }
        }

        let mut world = World {
            cfg: cfg.clone(),
            seed,
            dc_params,
            policy,
            cells,
            mmwave_cells,
            ues,
            channels,
            x2,
            trace,
            stats: RunStats::default(),
        };
        let mut engine = Engine::with_horizon(cfg.duration_s);
        world.setup(&mut engine)?;
        Ok(Simulation { engine, world })
    }

    pub fn channel(&self, cell: u32, cc: u8, ue: u32) -> Option<&CarrierChannel> {
        self.world.channels.get(&(cell, cc, ue))
    }

    /// `(cell, cc, ue)` of every channel instance.
    pub fn channel_keys(&self) -> Vec<(u32, u8, u32)> {
        self.world.channels.keys().copied().collect()
    }

    pub fn has_split_bearer(&self) -> bool {
        self.world.ues.iter().any(|u| u.pdcp.is_some())
    }

    pub fn x2_link_count(&self) -> usize {
        self.world.x2.len()
    }

    pub fn ue_position(&self, ue: u32) -> Option<[f64; 2]> {
        self.world.ues.get(ue as usize).map(|u| u.mobility.position)
    }

    pub fn run(mut self) -> Result<RunOutput> {
        let duration = self.world.cfg.duration_s;
        let world = &mut self.world;
        let events = self.engine.run_until(duration, |eng, ev| world.handle(eng, ev))?;
        world.stats.events = events;
        world.trace.flush()?;
        let metrics = world.metrics();
        Ok(RunOutput {
            metrics,
            stats: world.stats.clone(),
        })
    }
}

impl World {
    fn setup(&mut self, eng: &mut Engine<Action>) -> Result<()> {
        let duration = self.cfg.duration_s;
        for cell in self.cells.values() {
            for sched in cell.schedulers.values() {
                self.stats
                    .mac_acked_bytes
                    .insert(cc_key(cell.rat, sched.carrier().cc_id), 0);
            }
        }
        self.trace_channels(0.0)?;

        if self.dc_params.is_some() {
            for i in 0..self.ues.len() {
                self.initial_attach(eng, i as u32)?;
            }
        } else {
            let cell = self.cells.get_mut(&0).expect("single cell");
            for ue in &mut self.ues {
                cell.serving.insert(ue.id);
                cell.rlc.insert(
                    ue.id,
                    RlcEntity::new(self.cfg.rlc_mode, ue.id, Leg::Mmwave).with_saturation(self.cfg.sm_saturation_bytes),
                );
                ue.serving_mmwave = Some(0);
            }
        }

        // traffic first so the first BSR sees it
        match self.cfg.traffic {
            Traffic::Cbr { .. } => {
                for ue in 0..self.cfg.n_ues {
                    eng.schedule_at(0.0, Action::CbrArrival { ue, k: 0 })?;
                }
            }
            Traffic::FullBuffer { .. } if self.cfg.rlc_mode != RlcMode::Sm => {
                eng.schedule_at(0.0, Action::TrafficTick { k: 0 })?;
            }
            Traffic::FullBuffer { .. } => {}
        }
        for cell in self.cells.values() {
            eng.schedule_at(0.0, Action::BsrRefresh { cell: cell.id, k: 0 })?;
        }
        for cell in self.cells.values() {
            for &cc in cell.schedulers.keys() {
                eng.schedule_at(0.0, Action::CarrierTick { cell: cell.id, cc, k: 0 })?;
            }
        }
        let period = self.cfg.channel.update_period_s;
        if period <= duration {
            eng.schedule_at(period, Action::ChannelUpdate { k: 1 })?;
        }
        if let Some(p) = &self.dc_params {
            if p.measurement_period_s <= duration {
                eng.schedule_at(p.measurement_period_s, Action::Measurement { k: 1 })?;
            }
        }
        for (index, r) in self.cfg.reconfigurations.iter().enumerate() {
            eng.schedule_at(r.at_s, Action::Reconfigure { index })?;
        }
        for s in &self.cfg.script {
            match s {
                ScriptEvent::Handover {
                    at_s,
                    ue_id,
                    target_cell,
                } => {
                    eng.schedule_at(
                        *at_s,
                        Action::ScriptedHandover {
                            ue: *ue_id,
                            target: *target_cell,
                        },
                    )?;
                }
                ScriptEvent::Outage {
                    start_s,
                    end_s,
                    cells,
                    loss_db,
                } => {
                    let cells = if cells.is_empty() {
                        self.mmwave_cells.clone()
                    } else {
                        cells.clone()
                    };
                    eng.schedule_at(
                        *start_s,
                        Action::Outage {
                            cells: cells.clone(),
                            loss_db: *loss_db,
                        },
                    )?;
                    eng.schedule_at(*end_s, Action::Outage { cells, loss_db: 0.0 })?;
                }
            }
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<Action>, ev: Event<Action>) -> Result<()> {
        let now = ev.fire_time;
        match ev.payload {
            Action::ChannelUpdate { k } => self.on_channel_update(eng, now, k),
            Action::Measurement { k } => self.on_measurement(eng, now, k),
            Action::BsrRefresh { cell, k } => self.on_bsr_refresh(eng, now, cell, k),
            Action::CarrierTick { cell, cc, k } => self.on_carrier_tick(eng, now, cell, cc, k),
            Action::HarqFeedback(fb) => self.on_harq_feedback(eng, now, *fb),
            Action::CbrArrival { ue, k } => self.on_cbr(eng, now, ue, k),
            Action::TrafficTick { k } => self.on_traffic_tick(eng, now, k),
            Action::X2Arrival { cell, pdu } => self.dispatch_pdu(eng, now, cell, pdu),
            Action::ReorderTimer { ue, generation } => {
                let out = self.pdcp(ue).reorder_timeout(generation, now);
                self.on_pdcp_outcome(eng, now, ue, out)
            }
            Action::Signal { ue, msg } => {
                let detail = format!("{};{}->{}", msg.kind.as_str(), msg.from, msg.to);
                self.trace.dc(now, ue, "CTRL", &detail)
            }
            Action::ScriptedHandover { ue, target } => self.start_handover(eng, now, ue, target),
            Action::HandoverForward { ue } => self.on_handover_forward(eng, now, ue),
            Action::HandoverComplete { ue } => self.on_handover_complete(eng, now, ue),
            Action::Reconfigure { index } => self.on_reconfigure(eng, now, index),
            Action::ApplyReconfiguration { cell, reconf } => self.on_apply_reconfiguration(now, cell, reconf),
            Action::Outage { cells, loss_db } => {
                for ((c, _, _), ch) in self.channels.iter_mut() {
                    if cells.contains(c) {
                        ch.set_extra_loss_db(loss_db);
                    }
                }
                Ok(())
            }
        }
    }

    fn pdcp(&mut self, ue: u32) -> &mut SplitBearer {
        self.ues[ue as usize].pdcp.as_mut().expect("bearer has PDCP")
    }

    fn dc(&mut self, ue: u32) -> &mut DcCtx {
        self.ues[ue as usize].dc.as_mut().expect("UE has DC")
    }

    fn params(&self) -> &DcParams {
        self.dc_params.as_ref().expect("DC enabled")
    }

    // ---- radio ----

    fn trace_channels(&mut self, now: f64) -> Result<()> {
        if !self.trace.channel_enabled() {
            return Ok(());
        }
        for (&(cell, cc, ue), ch) in &self.channels {
            let s = ch.state();
            self.trace.channel(
                now,
                cc,
                ue,
                s.pathloss_db,
                s.blockage.active,
                s.wideband_sinr_db,
                cell,
                ch.carrier().rat.as_str(),
            )?;
        }
        Ok(())
    }

    fn on_channel_update(&mut self, eng: &mut Engine<Action>, now: f64, k: u64) -> Result<()> {
        let dt = self.cfg.channel.update_period_s;
        let los_model = self.cfg.channel.los_model;
        let los_period = self.cfg.channel.los_update_period_s;
        let positions: BTreeMap<u32, [f64; 2]> = self.cells.values().map(|c| (c.id, c.position)).collect();
        for ue in &mut self.ues {
            if ue.walking {
                ue.mobility = walk_step(&ue.mobility, dt, &mut ue.mobility_rng);
            }
            if los_model == LosModel::Probabilistic && now + 1e-9 >= ue.next_los_update {
                for (cell, pos) in &positions {
                    let d = ue.mobility.distance_to(*pos);
                    let rng = ue.los_rng.get_mut(cell).expect("los stream per cell");
                    ue.los.insert(*cell, draw_los(los_model, d, rng));
                }
                ue.next_los_update += los_period;
            }
        }
        for (&(cell, _, ue), ch) in self.channels.iter_mut() {
            let u = &self.ues[ue as usize];
            let (bs, ue_ant) = antennas(ch.carrier().rat, &self.cfg);
            let geom = LinkGeometry::new(u.mobility.distance_to(positions[&cell]), bs, ue_ant);
            ch.update(now, dt, &geom, u.los[&cell])?;
        }
        self.trace_channels(now)?;
        let next = (k + 1) as f64 * dt;
        if next <= self.cfg.duration_s {
            eng.schedule_at(next, Action::ChannelUpdate { k: k + 1 })?;
        }
        Ok(())
    }

    // ---- MAC ----

    fn on_bsr_refresh(&mut self, eng: &mut Engine<Action>, now: f64, cell_id: u32, k: u64) -> Result<()> {
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        cell.bsr.clear();
        let rat = cell.rat.as_str();
        for &ue in &cell.serving {
            let Some(rlc) = cell.rlc.get(&ue) else { continue };
            let bsr = rlc.generate_bsr(ue);
            if bsr.total() == 0 {
                continue;
            }
            for (cc, part) in cell.manager.split(&bsr)? {
                cell.bsr.entry(cc).or_default().insert((ue, bsr.bearer_id), part);
            }
            self.trace.mac_control(now, cell.primary_cc, ue, "BSR", cell_id, rat)?;
        }
        let next = (k + 1) as f64 * cell.bsr_period_s;
        if next <= self.cfg.duration_s {
            eng.schedule_at(next, Action::BsrRefresh { cell: cell_id, k: k + 1 })?;
        }
        Ok(())
    }

    fn on_carrier_tick(&mut self, eng: &mut Engine<Action>, now: f64, cell_id: u32, cc: u8, k: u64) -> Result<()> {
        let seed = self.seed;
        let delay = self.cfg.mac.feedback_delay_subframes as u64;
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        let rat = cell.rat;
        let sched = cell.schedulers.get_mut(&cc).expect("known carrier");
        let t_sf = sched.carrier().subframe_duration_s();
        let sinr: BTreeMap<u32, f64> = cell
            .serving
            .iter()
            .map(|&ue| (ue, self.channels[&(cell_id, cc, ue)].wideband_sinr_db()))
            .collect();
        let empty = BTreeMap::new();
        let snapshot = cell.bsr.get(&cc).unwrap_or(&empty);
        let dcis = sched.schedule_subframe(snapshot, &sinr);
        for dci in dcis {
            let flow = dci.flow();
            let ue = dci.ue_id;
            let attempt;
            let generation;
            if dci.is_retx {
                (attempt, generation) = sched.harq_state(flow, dci.harq_pid).expect("retx on a known flow");
            } else {
                let Some(rlc) = cell.rlc.get_mut(&dci.bearer_id) else { continue };
                let pdus = rlc.tx_opportunity(dci.tb_size_bytes);
                if pdus.is_empty() {
                    continue;
                }
                let used: u64 = pdus.iter().map(|p| p.size() as u64).sum();
                if let Some(b) = cell.bsr.get_mut(&cc).and_then(|m| m.get_mut(&flow)) {
                    let from_retx = used.min(b.retx_queue_bytes);
                    b.retx_queue_bytes -= from_retx;
                    b.tx_queue_bytes = b.tx_queue_bytes.saturating_sub(used - from_retx);
                }
                let leg = rlc.leg.as_str();
                for p in &pdus {
                    self.trace.rlc(now, leg, Some(cc), dci.bearer_id, "tx", p.sn, p.payload_bytes)?;
                }
                generation = sched.start_tb(&dci, pdus);
                attempt = 1;
            }
            let rng = cell
                .harq_rng
                .entry((cc, ue))
                .or_insert_with(|| RngStream::new(&format!("harq/cell{cell_id}/cc{cc}/ue{ue}"), seed));
            let eff = self.channels[&(cell_id, cc, ue)].effective_sinr_db();
            let outcome = transport_outcome(sched.table(), dci.mcs, eff, rng);
            if outcome == TbOutcome::Ack {
                *self.stats.mac_acked_bytes.entry(cc_key(rat, cc)).or_default() += dci.tb_size_bytes as u64;
            }
            self.trace.mac_data(
                now,
                cc,
                ue,
                dci.mcs,
                dci.tb_size_bytes,
                attempt,
                outcome.as_str(),
                cell_id,
                rat.as_str(),
            )?;
            eng.schedule_at(
                (k + delay) as f64 * t_sf,
                Action::HarqFeedback(Box::new(Feedback {
                    cell: cell_id,
                    cc,
                    flow,
                    pid: dci.harq_pid,
                    generation,
                    outcome,
                })),
            )?;
        }
        let next = (k + 1) as f64 * t_sf;
        if next <= self.cfg.duration_s {
            eng.schedule_at(next, Action::CarrierTick { cell: cell_id, cc, k: k + 1 })?;
        }
        Ok(())
    }

    fn on_harq_feedback(&mut self, eng: &mut Engine<Action>, now: f64, fb: Feedback) -> Result<()> {
        let cell = self.cells.get_mut(&fb.cell).expect("known cell");
        let rat = cell.rat.as_str();
        self.trace.mac_control(now, cell.primary_cc, fb.flow.0, "HARQ_FB", fb.cell, rat)?;
        let sched = cell.schedulers.get_mut(&fb.cc).expect("known carrier");
        let (pdus, outcome) = match sched.on_feedback(fb.flow, fb.pid, fb.generation, fb.outcome) {
            FeedbackResult::Delivered(p) => (p, TbOutcome::Ack),
            FeedbackResult::Dropped(p) => {
                let proc_ = sched.harq(fb.flow).expect("flow has HARQ").process(fb.pid);
                self.trace.mac_data(
                    now,
                    fb.cc,
                    fb.flow.0,
                    proc_.mcs,
                    proc_.pending_tb,
                    proc_.attempts,
                    "DROP",
                    fb.cell,
                    rat,
                )?;
                (p, TbOutcome::Nack)
            }
            FeedbackResult::Retransmit | FeedbackResult::Stale => return Ok(()),
        };
        self.rlc_feedback(eng, now, fb.cell, Some(fb.cc), fb.flow.1, &pdus, outcome)
    }

    /// Hands MAC outcomes to the cell's RLC entity and the events it yields
    /// to the UE-side PDCP.
    #[allow(clippy::too_many_arguments)]
    fn rlc_feedback(
        &mut self,
        eng: &mut Engine<Action>,
        now: f64,
        cell_id: u32,
        cc: Option<u8>,
        bearer: u32,
        pdus: &[RlcPdu],
        outcome: TbOutcome,
    ) -> Result<()> {
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        let Some(rlc) = cell.rlc.get_mut(&bearer) else {
            return Ok(());
        };
        let leg = rlc.leg.as_str();
        let mut acked = Vec::new();
        let mut events = Vec::new();
        for p in pdus {
            if let (Some(sn), TbOutcome::Ack) = (p.sn, outcome) {
                acked.push((sn, p.payload_bytes));
            }
            events.extend(rlc.feedback(p.pdu_id, outcome));
        }
        for (sn, bytes) in acked {
            self.trace.rlc(now, leg, cc, bearer, "ack", Some(sn), bytes)?;
        }
        for ev in events {
            match ev {
                RlcEvent::SaturationDelivered { bytes } => {
                    self.stats.rlc_delivered_bytes += bytes as u64;
                    self.trace.rlc(now, leg, cc, bearer, "deliver", None, bytes)?;
                }
                RlcEvent::SaturationLost { bytes } => {
                    self.stats.rlc_losses += 1;
                    self.trace.rlc(now, leg, cc, bearer, "loss", None, bytes)?;
                }
                RlcEvent::Delivered(pdu) => {
                    self.stats.rlc_delivered_bytes += pdu.payload_bytes as u64;
                    self.trace.rlc(now, leg, cc, bearer, "deliver", Some(pdu.sn), pdu.payload_bytes)?;
                    let ue = bearer;
                    let out = self.pdcp(ue).receive(pdu, now);
                    self.on_pdcp_outcome(eng, now, ue, out)?;
                }
                RlcEvent::Lost(pdu) => {
                    self.stats.rlc_losses += 1;
                    self.trace.rlc(now, leg, cc, bearer, "loss", Some(pdu.sn), pdu.payload_bytes)?;
                }
                RlcEvent::Retransmission { sn, bytes } => {
                    self.trace.rlc(now, leg, cc, bearer, "retx", Some(sn), bytes)?;
                }
            }
        }
        Ok(())
    }

    fn on_pdcp_outcome(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, out: ReceiveOutcome) -> Result<()> {
        if out.duplicate {
            self.stats.pdcp_duplicates += 1;
            self.trace.rlc(now, "PDCP", None, ue, "duplicate", None, 0)?;
        }
        for sn in out.lost {
            self.stats.pdcp_lost += 1;
            self.trace.rlc(now, "PDCP", None, ue, "loss", Some(sn), 0)?;
        }
        for p in out.delivered {
            self.stats.pdcp_delivered += 1;
            self.trace.rlc(now, "PDCP", None, ue, "deliver", Some(p.sn), p.payload_bytes)?;
        }
        if let Some((generation, deadline)) = out.start_timer {
            eng.schedule_at(deadline, Action::ReorderTimer { ue, generation })?;
        }
        Ok(())
    }

    /// Removes a UE from a cell's scheduling, abandoning in-flight TBs.
    fn detach(&mut self, cell_id: u32, ue: u32) {
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        cell.serving.remove(&ue);
        for sched in cell.schedulers.values_mut() {
            sched.abort_flow((ue, ue));
        }
        for m in cell.bsr.values_mut() {
            m.remove(&(ue, ue));
        }
    }

    fn attach(&mut self, cell_id: u32, ue: u32) {
        let mode = self.cfg.rlc_mode;
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        let leg = match cell.rat {
            Rat::Lte => Leg::Lte,
            Rat::Mmwave => Leg::Mmwave,
        };
        cell.rlc.entry(ue).or_insert_with(|| RlcEntity::new(mode, ue, leg));
        cell.serving.insert(ue);
    }

    fn rlc_at(&mut self, cell_id: u32, ue: u32) -> &mut RlcEntity {
        let mode = self.cfg.rlc_mode;
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        let leg = match cell.rat {
            Rat::Lte => Leg::Lte,
            Rat::Mmwave => Leg::Mmwave,
        };
        cell.rlc.entry(ue).or_insert_with(|| RlcEntity::new(mode, ue, leg))
    }

    // ---- traffic and PDCP routing ----

    fn on_cbr(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, k: u64) -> Result<()> {
        let Traffic::Cbr { rate_bps, packet_bytes } = self.cfg.traffic else {
            unreachable!("cbr events only with cbr traffic")
        };
        self.route_new(eng, now, ue, packet_bytes)?;
        let next = (k + 1) as f64 * packet_bytes as f64 * 8.0 / rate_bps;
        if next <= self.cfg.duration_s {
            eng.schedule_at(next, Action::CbrArrival { ue, k: k + 1 })?;
        }
        Ok(())
    }

    fn on_traffic_tick(&mut self, eng: &mut Engine<Action>, now: f64, k: u64) -> Result<()> {
        let Traffic::FullBuffer {
            window_bytes,
            packet_bytes,
        } = self.cfg.traffic
        else {
            unreachable!("traffic ticks only with full-buffer traffic")
        };
        for ue in 0..self.cfg.n_ues {
            loop {
                let p = self.pdcp(ue);
                let outstanding = (p.next_tx_sn() - p.rx_expected_sn()) * packet_bytes as u64;
                if outstanding >= window_bytes {
                    break;
                }
                self.route_new(eng, now, ue, packet_bytes)?;
            }
        }
        let next = (k + 1) as f64 * TRAFFIC_TICK_S;
        if next <= self.cfg.duration_s {
            eng.schedule_at(next, Action::TrafficTick { k: k + 1 })?;
        }
        Ok(())
    }

    fn route_new(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, bytes: u32) -> Result<()> {
        match self.pdcp(ue).route(bytes, now) {
            RouteDecision::Leg(leg, pdu) => self.send_on_leg(eng, now, ue, leg, pdu),
            RouteDecision::Buffered(pdu) => self.trace.rlc(now, "PDCP", None, ue, "buffer", Some(pdu.sn), pdu.payload_bytes),
        }
    }

    fn flush_pending(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32) -> Result<()> {
        for (leg, pdu) in self.pdcp(ue).flush_pending() {
            self.send_on_leg(eng, now, ue, leg, pdu)?;
        }
        Ok(())
    }

    fn send_on_leg(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, leg: Leg, pdu: PdcpPdu) -> Result<()> {
        self.trace.rlc(now, leg.as_str(), None, ue, "enq", Some(pdu.sn), pdu.payload_bytes)?;
        if self.dc_params.is_none() {
            self.rlc_at(0, ue).enqueue(pdu);
            return Ok(());
        }
        match leg {
            Leg::Lte => self.rlc_at(LTE_CELL_ID, ue).enqueue(pdu),
            Leg::Mmwave => {
                let dest = self.ues[ue as usize]
                    .serving_mmwave
                    .expect("mmWave leg routed only with a serving cell");
                self.send_x2(eng, now, LTE_CELL_ID, dest, pdu)?;
            }
        }
        Ok(())
    }

    fn trace_forward(&mut self, now: f64, from: u32, ue: u32, pdu: PdcpPdu) -> Result<()> {
        let leg = if from == LTE_CELL_ID { Leg::Lte } else { Leg::Mmwave };
        self.trace.rlc(now, leg.as_str(), None, ue, "fwd", Some(pdu.sn), pdu.payload_bytes)
    }

    fn send_x2(&mut self, eng: &mut Engine<Action>, now: f64, from: u32, to: u32, pdu: PdcpPdu) -> Result<()> {
        let link = self.x2.get_mut(&(from, to)).expect("X2 link between every cell pair");
        let arrival = link.deliver(pdu.payload_bytes, now);
        eng.schedule_at(arrival, Action::X2Arrival { cell: to, pdu })?;
        Ok(())
    }

    /// Where mmWave-leg data for `ue` should live right now.
    fn mmwave_destination(&self, ue: u32) -> Option<u32> {
        let u = &self.ues[ue as usize];
        let dc = u.dc.as_ref()?;
        match (&dc.plan, dc.state.mode) {
            (Some(plan), _) => Some(plan.target),
            (None, DcMode::MmwaveActive) => dc.state.secondary_cell,
            (None, DcMode::LteFallback) => None,
        }
    }

    fn lte_leg_active(&self, ue: u32) -> bool {
        match self.policy {
            RoutingPolicy::Split { .. } => true,
            RoutingPolicy::MmwaveWithFallback => self.ues[ue as usize]
                .dc
                .as_ref()
                .is_some_and(|d| d.state.mode == DcMode::LteFallback && d.plan.is_none()),
        }
    }

    /// A PDCP PDU arrived at `cell` over X2: keep it if the cell still owns
    /// the UE's data for that leg, otherwise pass it on.
    fn dispatch_pdu(&mut self, eng: &mut Engine<Action>, now: f64, cell: u32, pdu: PdcpPdu) -> Result<()> {
        let ue = pdu.bearer_id;
        let dest = self.mmwave_destination(ue);
        if cell == LTE_CELL_ID {
            if self.lte_leg_active(ue) || dest.is_none() {
                self.rlc_at(cell, ue).enqueue(pdu);
                return Ok(());
            }
            return self.send_x2(eng, now, cell, dest.expect("checked"), pdu);
        }
        let dc = self.ues[ue as usize].dc.as_ref().expect("X2 only with DC");
        let source_pending = dc
            .plan
            .as_ref()
            .is_some_and(|p| p.source == Some(cell) && !dc.forwarded);
        if dest == Some(cell) || source_pending {
            self.rlc_at(cell, ue).enqueue(pdu);
            return Ok(());
        }
        let to = dest.unwrap_or(LTE_CELL_ID);
        self.send_x2(eng, now, cell, to, pdu)
    }

    // ---- dual connectivity ----

    fn mmwave_samples(&self, ue: u32) -> BTreeMap<u32, f64> {
        self.mmwave_cells
            .iter()
            .map(|&c| {
                let primary = self.cells[&c].primary_cc;
                (c, self.channels[&(c, primary, ue)].wideband_sinr_db())
            })
            .collect()
    }

    fn signal(&mut self, eng: &mut Engine<Action>, ue: u32, msg: SignalMessage) -> Result<()> {
        eng.schedule_at(msg.send_time, Action::Signal { ue, msg })?;
        Ok(())
    }

    fn initial_attach(&mut self, eng: &mut Engine<Action>, ue: u32) -> Result<()> {
        let samples = self.mmwave_samples(ue);
        let p = self.params().clone();
        self.attach(LTE_CELL_ID, ue);
        let dc = self.dc(ue);
        let report = dc.filter.collect(ue, &samples, 0.0);
        let choice = select_secondary(&report, None, p.hysteresis_db, p.outage_threshold_db);
        dc.last_report = Some(report);
        match choice {
            Some(cell) => {
                dc.state.complete_handover(cell);
                self.ues[ue as usize].serving_mmwave = Some(cell);
                self.attach(cell, ue);
                self.signal_addition(eng, 0.0, ue, cell, &p)?;
            }
            None => {
                let dc = self.dc(ue);
                dc.fallback_since = Some(0.0);
                self.pdcp(ue).set_mmwave_outage(true);
                self.trace.dc(0.0, ue, "FALLBACK", "initial")?;
            }
        }
        Ok(())
    }

    fn signal_addition(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, cell: u32, p: &DcParams) -> Result<()> {
        use crate::dc::SignalKind::*;
        let anchor = Node::LteEnb(LTE_CELL_ID);
        let tgt = Node::MmwaveCell(cell);
        for (dt, kind, from, to) in [
            (0.0, SecondaryAdditionRequest, anchor, tgt),
            (p.x2_latency_s, SecondaryAdditionAck, tgt, anchor),
            (2.0 * p.x2_latency_s, RrcReconfiguration, anchor, Node::Ue(ue)),
        ] {
            self.signal(
                eng,
                ue,
                SignalMessage {
                    send_time: now + dt,
                    kind,
                    from,
                    to,
                },
            )?;
        }
        Ok(())
    }

    fn on_measurement(&mut self, eng: &mut Engine<Action>, now: f64, k: u64) -> Result<()> {
        let p = self.params().clone();
        for ue in 0..self.cfg.n_ues {
            let samples = self.mmwave_samples(ue);
            let dc = self.dc(ue);
            let report = dc.filter.collect(ue, &samples, now);
            dc.last_report = Some(report.clone());
            let detail = report
                .cells
                .iter()
                .map(|(c, s)| format!("MMW{c}={s:.2}"))
                .collect::<Vec<_>>()
                .join(";");
            self.trace.dc(now, ue, "MEAS", &detail)?;
            let lte = &self.cells[&LTE_CELL_ID];
            let primary = lte.primary_cc;
            self.trace.mac_control(now, primary, ue, "MEAS", LTE_CELL_ID, "LTE")?;

            let dc = self.dc(ue);
            if dc.state.handover_in_progress {
                continue;
            }
            match detect_outage_and_fallback(&mut dc.state, &report, &p) {
                Some(DcTransition::Fallback { from }) => self.fallback(eng, now, ue, from, "outage")?,
                Some(DcTransition::Recovery { to }) => self.recovery(eng, now, ue, to)?,
                None => {
                    let dc = self.dc(ue);
                    if p.auto_handover && dc.state.mode == DcMode::MmwaveActive {
                        let current = dc.state.secondary_cell;
                        let best = select_secondary(&report, current, p.hysteresis_db, p.outage_threshold_db);
                        if let Some(target) = best.filter(|b| Some(*b) != current) {
                            self.start_handover(eng, now, ue, target)?;
                        }
                    }
                }
            }
        }
        let next = (k + 1) as f64 * p.measurement_period_s;
        if next <= self.cfg.duration_s {
            eng.schedule_at(next, Action::Measurement { k: k + 1 })?;
        }
        Ok(())
    }

    /// Moves every PDU held by `from` for `ue` to `to` over X2.
    fn drain_to(&mut self, eng: &mut Engine<Action>, now: f64, from: u32, ue: u32, to: u32) -> Result<()> {
        let pdus = self
            .cells
            .get_mut(&from)
            .and_then(|c| c.rlc.get_mut(&ue))
            .map(|r| r.drain_all())
            .unwrap_or_default();
        for pdu in pdus {
            self.trace_forward(now, from, ue, pdu)?;
            self.send_x2(eng, now, from, to, pdu)?;
        }
        Ok(())
    }

    fn fallback(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, from: u32, reason: &str) -> Result<()> {
        self.trace.dc(now, ue, "FALLBACK", &format!("{reason};from=MMW{from}"))?;
        self.signal(
            eng,
            ue,
            SignalMessage {
                send_time: now,
                kind: crate::dc::SignalKind::SecondaryReleaseRequest,
                from: Node::LteEnb(LTE_CELL_ID),
                to: Node::MmwaveCell(from),
            },
        )?;
        self.dc(ue).fallback_since = Some(now);
        self.ues[ue as usize].serving_mmwave = None;
        self.pdcp(ue).set_mmwave_outage(true);
        self.detach(from, ue);
        self.drain_to(eng, now, from, ue, LTE_CELL_ID)?;
        self.flush_pending(eng, now, ue)
    }

    fn recovery(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, to: u32) -> Result<()> {
        self.trace.dc(now, ue, "RECOVERY", &format!("to=MMW{to}"))?;
        let p = self.params().clone();
        self.signal_addition(eng, now, ue, to, &p)?;
        let dc = self.dc(ue);
        if let Some(since) = dc.fallback_since.take() {
            dc.fallback_time_s += now - since;
        }
        self.ues[ue as usize].serving_mmwave = Some(to);
        self.attach(to, ue);
        self.pdcp(ue).set_mmwave_outage(false);
        if self.policy == RoutingPolicy::MmwaveWithFallback {
            // the LTE leg stops carrying data at once
            let cell = self.cells.get_mut(&LTE_CELL_ID).expect("anchor");
            for sched in cell.schedulers.values_mut() {
                sched.abort_flow((ue, ue));
            }
            for m in cell.bsr.values_mut() {
                m.remove(&(ue, ue));
            }
            self.drain_to(eng, now, LTE_CELL_ID, ue, to)?;
        }
        self.flush_pending(eng, now, ue)
    }

    fn start_handover(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32, target: u32) -> Result<()> {
        let p = self.params().clone();
        let dc = self.dc(ue);
        if dc.state.secondary_cell.is_none() {
            log::warn!("t={now:.6}: UE {ue} has no secondary cell; handover to {target} ignored");
            return Ok(());
        }
        let plan = match dc.state.trigger_secondary_handover(target, now, &p) {
            Ok(plan) => plan,
            Err(e) => {
                log::warn!("t={now:.6}: handover rejected: {e}");
                return Ok(());
            }
        };
        let source = plan.source.expect("checked above");
        let (forward, complete) = (plan.forward_time, plan.complete_time);
        let messages = plan.messages.clone();
        dc.plan = Some(plan);
        dc.forwarded = false;
        self.trace
            .dc(now, ue, "HO_TRIGGER", &format!("source=MMW{source};target=MMW{target}"))?;
        for msg in messages {
            self.signal(eng, ue, msg)?;
        }
        self.detach(source, ue);
        self.pdcp(ue).set_leg_available(Leg::Mmwave, false);
        eng.schedule_at(forward, Action::HandoverForward { ue })?;
        eng.schedule_at(complete, Action::HandoverComplete { ue })?;
        Ok(())
    }

    fn on_handover_forward(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32) -> Result<()> {
        let p = self.params().clone();
        let dc = self.dc(ue);
        let Some(plan) = dc.plan.clone() else { return Ok(()) };
        let source = plan.source.expect("handover from a serving cell");
        let target_sinr = dc
            .last_report
            .as_ref()
            .and_then(|r| r.cells.get(&plan.target).copied())
            .unwrap_or(f64::NEG_INFINITY);
        if target_sinr < p.outage_threshold_db {
            dc.state.abort_handover();
            dc.plan = None;
            dc.fallback_since = Some(now);
            self.trace
                .dc(now, ue, "FALLBACK", &format!("handover-abort;target=MMW{}", plan.target))?;
            self.ues[ue as usize].serving_mmwave = None;
            let pdcp = self.pdcp(ue);
            pdcp.set_mmwave_outage(true);
            pdcp.set_leg_available(Leg::Mmwave, true);
            self.drain_to(eng, now, source, ue, LTE_CELL_ID)?;
            return self.flush_pending(eng, now, ue);
        }
        dc.forwarded = true;
        let mode = match self.cfg.rlc_mode {
            RlcMode::Am => ForwardMode::Lossless,
            _ => ForwardMode::Seamless,
        };
        let fwd = self.rlc_at(source, ue).handover_forward(mode)?;
        for pdu in &fwd.discarded {
            self.stats.handover_discards += 1;
            self.trace
                .rlc(now, Leg::Mmwave.as_str(), None, ue, "discard", Some(pdu.sn), pdu.payload_bytes)?;
        }
        for pdu in fwd.forwarded {
            self.trace_forward(now, source, ue, pdu)?;
            self.send_x2(eng, now, source, plan.target, pdu)?;
        }
        Ok(())
    }

    fn on_handover_complete(&mut self, eng: &mut Engine<Action>, now: f64, ue: u32) -> Result<()> {
        let dc = self.dc(ue);
        let Some(plan) = dc.plan.take() else { return Ok(()) };
        dc.state.complete_handover(plan.target);
        dc.forwarded = false;
        self.stats.handovers += 1;
        let detail = format!(
            "source=MMW{};target=MMW{};interruption_us={}",
            plan.source.expect("handover from a serving cell"),
            plan.target,
            super::trace::time_us(now - plan.trigger_time)
        );
        self.trace.dc(now, ue, "HO_DONE", &detail)?;
        self.ues[ue as usize].serving_mmwave = Some(plan.target);
        self.attach(plan.target, ue);
        self.pdcp(ue).set_leg_available(Leg::Mmwave, true);
        self.flush_pending(eng, now, ue)
    }

    // ---- carrier reconfiguration ----

    fn on_reconfigure(&mut self, eng: &mut Engine<Action>, now: f64, index: usize) -> Result<()> {
        let r = self.cfg.reconfigurations[index].clone();
        let carriers: Vec<CarrierConfig> = self
            .cfg
            .carriers
            .iter()
            .filter(|c| r.carriers.contains(&c.cc_id))
            .cloned()
            .collect();
        for &cell_id in &self.mmwave_cells.clone() {
            let cell = &self.cells[&cell_id];
            let set = CarrierSet::from_carriers(carriers.clone())?;
            let reconf = cell.manager.reconfigure_carriers(r.ue_id, set, now)?;
            let primary = cell.primary_cc;
            self.trace.mac_control(now, primary, r.ue_id, "RRC_RECONF", cell_id, "MMWAVE")?;
            eng.schedule_at(reconf.effective_time, Action::ApplyReconfiguration { cell: cell_id, reconf })?;
        }
        Ok(())
    }

    fn on_apply_reconfiguration(&mut self, now: f64, cell_id: u32, reconf: Reconfiguration) -> Result<()> {
        let ue = reconf.ue_id;
        let cell = self.cells.get_mut(&cell_id).expect("known cell");
        let removed = cell.manager.apply(reconf);
        let mut aborted = Vec::new();
        for cc in removed {
            if let Some(s) = cell.schedulers.get_mut(&cc) {
                aborted.push((cc, s.abort_flow((ue, ue)).concat()));
            }
            if let Some(m) = cell.bsr.get_mut(&cc) {
                m.remove(&(ue, ue));
            }
        }
        // no PDCP work can follow a NACK, so no engine access is needed
        let mut dummy = Engine::new();
        for (cc, pdus) in aborted {
            self.rlc_feedback(&mut dummy, now, cell_id, Some(cc), ue, &pdus, TbOutcome::Nack)?;
        }
        Ok(())
    }

    fn metrics(&mut self) -> RunMetrics {
        let d = self.cfg.duration_s;
        let mut fallback = 0.0;
        for u in &mut self.ues {
            if let Some(dc) = u.dc.as_mut() {
                if let Some(since) = dc.fallback_since.take() {
                    dc.fallback_time_s += d - since;
                }
                fallback += dc.fallback_time_s;
            }
        }
        RunMetrics {
            s_rlc_bps: self.stats.rlc_delivered_bytes as f64 * 8.0 / d,
            per_cc_mac_bps: self
                .stats
                .mac_acked_bytes
                .iter()
                .map(|(k, b)| (k.clone(), *b as f64 * 8.0 / d))
                .collect(),
            handover_count: self.stats.handovers as f64,
            fallback_time_fraction: fallback / (d * self.cfg.n_ues as f64),
        }
    }
}
