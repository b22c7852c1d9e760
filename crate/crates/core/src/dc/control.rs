use std::fmt;

use serde::{Deserialize, Serialize};

use super::{select_secondary, MeasurementReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcParams {
    pub outage_threshold_db: f64,
    pub hysteresis_db: f64,
    pub ema_alpha: f64,
    pub measurement_period_s: f64,
    pub x2_latency_s: f64,
    pub x2_datarate_bps: f64,
    pub rrc_delay_s: f64,
    pub reorder_timeout_s: f64,
    /// Let measurements trigger handovers; off for scripted-only tests.
    pub auto_handover: bool,
}

impl Default for DcParams {
    fn default() -> Self {
        DcParams {
            outage_threshold_db: -5.0,
            hysteresis_db: 3.0,
            ema_alpha: 0.1,
            measurement_period_s: 1e-3,
            x2_latency_s: 1e-3,
            x2_datarate_bps: 10e9,
            rrc_delay_s: 1e-3,
            reorder_timeout_s: 0.1,
            auto_handover: true,
        }
    }
}

impl DcParams {
    /// Trigger to the start of data forwarding: four X2 messages.
    pub fn signaling_delay_s(&self) -> f64 {
        4.0 * self.x2_latency_s
    }

    /// Trigger to the UE being served by the target.
    pub fn interruption_s(&self) -> f64 {
        self.signaling_delay_s() + self.rrc_delay_s
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0) {
            v.push(format!("dc.ema_alpha must be in (0, 1], got {}", self.ema_alpha));
        }
        for (name, x) in [
            ("dc.measurement_period_s", self.measurement_period_s),
            ("dc.x2_datarate_bps", self.x2_datarate_bps),
            ("dc.reorder_timeout_s", self.reorder_timeout_s),
        ] {
            if !(x > 0.0) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        }
        for (name, x) in [("dc.x2_latency_s", self.x2_latency_s), ("dc.rrc_delay_s", self.rrc_delay_s)] {
            if !(x >= 0.0) {
                v.push(format!("{name} must be non-negative, got {x}"));
            }
        }
        if !(self.hysteresis_db >= 0.0) {
            v.push(format!("dc.hysteresis_db must be non-negative, got {}", self.hysteresis_db));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcMode {
    MmwaveActive,
    LteFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Ue(u32),
    LteEnb(u32),
    MmwaveCell(u32),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Ue(i) => write!(f, "UE{i}"),
            Node::LteEnb(i) => write!(f, "LTE{i}"),
            Node::MmwaveCell(i) => write!(f, "MMW{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    SecondaryAdditionRequest,
    SecondaryAdditionAck,
    SecondaryReleaseRequest,
    SnStatusTransfer,
    RrcReconfiguration,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::SecondaryAdditionRequest => "X2:SECONDARY_ADD_REQ",
            SignalKind::SecondaryAdditionAck => "X2:SECONDARY_ADD_ACK",
            SignalKind::SecondaryReleaseRequest => "X2:SECONDARY_RELEASE_REQ",
            SignalKind::SnStatusTransfer => "X2:SN_STATUS_TRANSFER",
            SignalKind::RrcReconfiguration => "RRC:RECONFIGURATION",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalMessage {
    pub send_time: f64,
    pub kind: SignalKind,
    pub from: Node,
    pub to: Node,
}

/// Timeline of one secondary-cell handover.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoverPlan {
    pub ue_id: u32,
    pub source: Option<u32>,
    pub target: u32,
    pub trigger_time: f64,
    /// Source hands its buffer to the target.
    pub forward_time: f64,
    /// UE reconfigured; PDCP routes to the target from here on.
    pub complete_time: f64,
    pub messages: Vec<SignalMessage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcState {
    pub ue_id: u32,
    pub anchor_cell: u32,
    pub secondary_cell: Option<u32>,
    pub mode: DcMode,
    pub handover_in_progress: bool,
}

impl DcState {
    pub fn new(ue_id: u32, anchor_cell: u32) -> Self {
        DcState {
            ue_id,
            anchor_cell,
            secondary_cell: None,
            mode: DcMode::LteFallback,
            handover_in_progress: false,
        }
    }

    /// Plans a fast secondary handover; only the anchor, the two mmWave
    /// cells and the UE exchange messages.
    pub fn trigger_secondary_handover(&mut self, target: u32, now: f64, p: &DcParams) -> Result<HandoverPlan> {
        if self.handover_in_progress {
            return Err(Error::config(format!("UE {} already has a handover in progress", self.ue_id)));
        }
        if self.secondary_cell == Some(target) {
            return Err(Error::config(format!("UE {} is already served by cell {target}", self.ue_id)));
        }
        self.handover_in_progress = true;
        let l = p.x2_latency_s;
        let anchor = Node::LteEnb(self.anchor_cell);
        let tgt = Node::MmwaveCell(target);
        let mut messages = vec![
            SignalMessage {
                send_time: now,
                kind: SignalKind::SecondaryAdditionRequest,
                from: anchor,
                to: tgt,
            },
            SignalMessage {
                send_time: now + l,
                kind: SignalKind::SecondaryAdditionAck,
                from: tgt,
                to: anchor,
            },
        ];
        if let Some(src) = self.secondary_cell {
            messages.push(SignalMessage {
                send_time: now + 2.0 * l,
                kind: SignalKind::SecondaryReleaseRequest,
                from: anchor,
                to: Node::MmwaveCell(src),
            });
            messages.push(SignalMessage {
                send_time: now + 3.0 * l,
                kind: SignalKind::SnStatusTransfer,
                from: Node::MmwaveCell(src),
                to: tgt,
            });
        }
        let forward_time = now + p.signaling_delay_s();
        messages.push(SignalMessage {
            send_time: forward_time,
            kind: SignalKind::RrcReconfiguration,
            from: anchor,
            to: Node::Ue(self.ue_id),
        });
        Ok(HandoverPlan {
            ue_id: self.ue_id,
            source: self.secondary_cell,
            target,
            trigger_time: now,
            forward_time,
            complete_time: forward_time + p.rrc_delay_s,
            messages,
        })
    }

    pub fn complete_handover(&mut self, target: u32) {
        self.handover_in_progress = false;
        self.secondary_cell = Some(target);
        self.mode = DcMode::MmwaveActive;
    }

    /// Target found in outage at execution.
    pub fn abort_handover(&mut self) {
        self.handover_in_progress = false;
        self.secondary_cell = None;
        self.mode = DcMode::LteFallback;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcTransition {
    Fallback { from: u32 },
    Recovery { to: u32 },
}

/// Applies the outage and recovery rules to `state`.
pub fn detect_outage_and_fallback(
    state: &mut DcState,
    report: &MeasurementReport,
    p: &DcParams,
) -> Option<DcTransition> {
    if state.handover_in_progress {
        return None;
    }
    match state.mode {
        DcMode::MmwaveActive if report.all_below(p.outage_threshold_db) => {
            let from = state.secondary_cell.take().expect("active mode has a secondary");
            state.mode = DcMode::LteFallback;
            Some(DcTransition::Fallback { from })
        }
        DcMode::LteFallback if !report.all_below(p.outage_threshold_db + p.hysteresis_db) => {
            let to = select_secondary(report, None, p.hysteresis_db, p.outage_threshold_db)?;
            state.secondary_cell = Some(to);
            state.mode = DcMode::MmwaveActive;
            Some(DcTransition::Recovery { to })
        }
        _ => None,
    }
}
