use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::Leg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdcpPdu {
    pub sn: u64,
    pub bearer_id: u32,
    pub payload_bytes: u32,
    pub enqueue_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RoutingPolicy {
    /// Everything over mmWave; LTE only while the mmWave leg is in outage.
    #[default]
    MmwaveWithFallback,
    /// Deterministic weighted alternation; `weight` is the mmWave share.
    Split { weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteDecision {
    Leg(Leg, PdcpPdu),
    /// No usable leg; held at PDCP until one returns.
    Buffered(PdcpPdu),
}

/// Result of one receive or timer expiry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReceiveOutcome {
    pub delivered: Vec<PdcpPdu>,
    pub duplicate: bool,
    /// SNs given up on.
    pub lost: Vec<u64>,
    /// A reorder timer to arm: `(generation, deadline)`.
    pub start_timer: Option<(u64, f64)>,
}

/// Transmit routing and in-order reception for one bearer.
#[derive(Debug, Clone)]
pub struct SplitBearer {
    pub bearer_id: u32,
    pub policy: RoutingPolicy,
    pub reorder_timeout_s: f64,
    next_tx_sn: u64,
    lte_available: bool,
    mmwave_available: bool,
    mmwave_outage: bool,
    split_credit: f64,
    pending: VecDeque<PdcpPdu>,
    rx_expected_sn: u64,
    rx_buffer: BTreeMap<u64, PdcpPdu>,
    timer: Option<(u64, u64)>,
    timer_generation: u64,
    duplicates: u64,
    lost: u64,
}

impl SplitBearer {
    pub fn new(bearer_id: u32, policy: RoutingPolicy, reorder_timeout_s: f64) -> Self {
        SplitBearer {
            bearer_id,
            policy,
            reorder_timeout_s,
            next_tx_sn: 0,
            lte_available: true,
            mmwave_available: true,
            mmwave_outage: false,
            split_credit: 0.0,
            pending: VecDeque::new(),
            rx_expected_sn: 0,
            rx_buffer: BTreeMap::new(),
            timer: None,
            timer_generation: 0,
            duplicates: 0,
            lost: 0,
        }
    }

    pub fn next_tx_sn(&self) -> u64 {
        self.next_tx_sn
    }

    pub fn rx_expected_sn(&self) -> u64 {
        self.rx_expected_sn
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn lost(&self) -> u64 {
        self.lost
    }

    pub fn set_leg_available(&mut self, leg: Leg, available: bool) {
        match leg {
            Leg::Lte => self.lte_available = available,
            Leg::Mmwave => self.mmwave_available = available,
        }
    }

    pub fn set_mmwave_outage(&mut self, outage: bool) {
        self.mmwave_outage = outage;
    }

    pub fn mmwave_outage(&self) -> bool {
        self.mmwave_outage
    }

    fn choose_leg(&mut self) -> Option<Leg> {
        let mmw = self.mmwave_available && !self.mmwave_outage;
        match self.policy {
            RoutingPolicy::MmwaveWithFallback => {
                if !self.mmwave_outage {
                    mmw.then_some(Leg::Mmwave)
                } else {
                    self.lte_available.then_some(Leg::Lte)
                }
            }
            RoutingPolicy::Split { weight } => match (mmw, self.lte_available) {
                (true, true) => {
                    self.split_credit += weight;
                    if self.split_credit >= 0.5 {
                        self.split_credit -= 1.0;
                        Some(Leg::Mmwave)
                    } else {
                        Some(Leg::Lte)
                    }
                }
                (true, false) => Some(Leg::Mmwave),
                (false, true) => Some(Leg::Lte),
                (false, false) => None,
            },
        }
    }

    /// Assigns the next SN and picks a leg.
    pub fn route(&mut self, payload_bytes: u32, now: f64) -> RouteDecision {
        let pdu = PdcpPdu {
            sn: self.next_tx_sn,
            bearer_id: self.bearer_id,
            payload_bytes,
            enqueue_time: now,
        };
        self.next_tx_sn += 1;
        if !self.pending.is_empty() {
            self.pending.push_back(pdu);
            return RouteDecision::Buffered(pdu);
        }
        match self.choose_leg() {
            Some(leg) => RouteDecision::Leg(leg, pdu),
            None => {
                self.pending.push_back(pdu);
                RouteDecision::Buffered(pdu)
            }
        }
    }

    /// Re-routes held PDUs once a leg is usable again.
    pub fn flush_pending(&mut self) -> Vec<(Leg, PdcpPdu)> {
        let mut out = Vec::new();
        while let Some(&pdu) = self.pending.front() {
            match self.choose_leg() {
                Some(leg) => {
                    self.pending.pop_front();
                    out.push((leg, pdu));
                }
                None => break,
            }
        }
        out
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn receive(&mut self, pdu: PdcpPdu, now: f64) -> ReceiveOutcome {
        let mut out = ReceiveOutcome::default();
        if pdu.sn < self.rx_expected_sn || self.rx_buffer.contains_key(&pdu.sn) {
            self.duplicates += 1;
            out.duplicate = true;
            return out;
        }
        self.rx_buffer.insert(pdu.sn, pdu);
        self.release_in_order(&mut out.delivered);
        if self.rx_buffer.is_empty() {
            self.timer = None;
        } else if self.timer.is_none() {
            out.start_timer = Some(self.arm(now));
        }
        out
    }

    fn arm(&mut self, now: f64) -> (u64, f64) {
        self.timer_generation += 1;
        let highest = *self.rx_buffer.keys().next_back().expect("non-empty");
        self.timer = Some((self.timer_generation, highest + 1));
        (self.timer_generation, now + self.reorder_timeout_s)
    }

    fn release_in_order(&mut self, delivered: &mut Vec<PdcpPdu>) {
        while let Some(p) = self.rx_buffer.remove(&self.rx_expected_sn) {
            delivered.push(p);
            self.rx_expected_sn += 1;
        }
    }

    /// Reorder timer expiry; stale generations are ignored.
    pub fn reorder_timeout(&mut self, generation: u64, now: f64) -> ReceiveOutcome {
        let mut out = ReceiveOutcome::default();
        let Some((g, reorder_sn)) = self.timer else {
            return out;
        };
        if g != generation {
            return out;
        }
        self.timer = None;
        while self.rx_expected_sn < reorder_sn {
            match self.rx_buffer.remove(&self.rx_expected_sn) {
                Some(p) => out.delivered.push(p),
                None => out.lost.push(self.rx_expected_sn),
            }
            self.rx_expected_sn += 1;
        }
        self.lost += out.lost.len() as u64;
        self.release_in_order(&mut out.delivered);
        if !self.rx_buffer.is_empty() {
            out.start_timer = Some(self.arm(now));
        }
        out
    }
}
