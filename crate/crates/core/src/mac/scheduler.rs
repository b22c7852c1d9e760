use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{tb_size_bytes, FeedbackResult, HarqEntity, McsTable, TbOutcome};
use crate::ca::BufferStatusReport;
use crate::channel::CarrierConfig;

/// `(ue_id, bearer_id)`: the unit the round-robin rotates over.
pub type FlowId = (u32, u32);

/// RLC header bytes the scheduler budgets for when sizing a demand-limited grant.
const GRANT_HEADER_BYTES: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacParams {
    pub harq_max_attempts: u8,
    pub harq_processes: u8,
    pub feedback_delay_subframes: u32,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            harq_max_attempts: 3,
            harq_processes: 16,
            feedback_delay_subframes: 2,
        }
    }
}

/// Downlink grant for one flow in one subframe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dci {
    pub cc_id: u8,
    pub ue_id: u32,
    pub bearer_id: u32,
    pub n_symbols: u32,
    pub mcs: u8,
    pub tb_size_bytes: u32,
    pub is_retx: bool,
    pub harq_pid: u8,
}

impl Dci {
    pub fn flow(&self) -> FlowId {
        (self.ue_id, self.bearer_id)
    }
}

/// Independent round-robin scheduler of one component carrier.
#[derive(Debug, Clone)]
pub struct CarrierScheduler<P> {
    carrier: CarrierConfig,
    table: McsTable<f64>,
    params: MacParams,
    rotation: u64,
    harq: BTreeMap<FlowId, HarqEntity<P>>,
}

impl<P> CarrierScheduler<P> {
    pub fn new(carrier: CarrierConfig, table: McsTable<f64>, params: MacParams) -> Self {
        CarrierScheduler {
            carrier,
            table,
            params,
            rotation: 0,
            harq: BTreeMap::new(),
        }
    }

    pub fn carrier(&self) -> &CarrierConfig {
        &self.carrier
    }

    pub fn table(&self) -> &McsTable<f64> {
        &self.table
    }

    fn entity(&mut self, flow: FlowId) -> &mut HarqEntity<P> {
        let params = self.params;
        self.harq
            .entry(flow)
            .or_insert_with(|| HarqEntity::new(params.harq_processes, params.harq_max_attempts))
    }

    pub fn harq(&self, flow: FlowId) -> Option<&HarqEntity<P>> {
        self.harq.get(&flow)
    }

    /// Allocates this subframe's data symbols.
    ///
    /// Pending HARQ retransmissions go first with their original size. The
    /// remaining symbols are water-filled over flows with queued bytes: equal
    /// shares, demand-limited flows capped at what they need, leftovers to
    /// the earliest flows in an order whose start rotates every subframe.
    /// Retransmission DCIs are committed to HARQ here; new-data DCIs must be
    /// committed by the caller with [`Self::start_tb`].
    pub fn schedule_subframe(
        &mut self,
        bsr_table: &BTreeMap<FlowId, BufferStatusReport>,
        sinr_by_ue: &BTreeMap<u32, f64>,
    ) -> Vec<Dci> {
        let mut flows: BTreeSet<FlowId> = bsr_table
            .iter()
            .filter(|(_, b)| b.total() > 0)
            .map(|(f, _)| *f)
            .collect();
        flows.extend(
            self.harq
                .iter()
                .filter(|(_, h)| h.has_pending_retx())
                .map(|(f, _)| *f),
        );
        let mut order: Vec<FlowId> = flows.into_iter().collect();
        if !order.is_empty() {
            let k = (self.rotation % order.len() as u64) as usize;
            order.rotate_left(k);
        }
        self.rotation = self.rotation.wrapping_add(1);

        let cc_id = self.carrier.cc_id;
        let mut remaining = self.carrier.data_symbols();
        let mut dcis = Vec::new();
        let mut served = BTreeSet::new();

        for &flow in &order {
            let Some(h) = self.harq.get_mut(&flow) else {
                continue;
            };
            let retx: Vec<(u8, u32, u8, u32)> = h
                .pending_retx()
                .map(|p| (p.harq_pid, p.n_symbols, p.mcs, p.pending_tb))
                .collect();
            for (pid, n_symbols, mcs, tb) in retx {
                if n_symbols > remaining {
                    continue;
                }
                h.retransmit(pid);
                remaining -= n_symbols;
                served.insert(flow);
                dcis.push(Dci {
                    cc_id,
                    ue_id: flow.0,
                    bearer_id: flow.1,
                    n_symbols,
                    mcs,
                    tb_size_bytes: tb,
                    is_retx: true,
                    harq_pid: pid,
                });
            }
        }

        struct Candidate {
            flow: FlowId,
            need: u32,
            mcs: crate::mac::McsDecision,
            pid: u8,
            alloc: u32,
        }
        let mut candidates = Vec::new();
        for &flow in &order {
            if served.contains(&flow) {
                continue;
            }
            let demand = bsr_table.get(&flow).map_or(0, |b| b.total());
            let Some(&sinr) = sinr_by_ue.get(&flow.0) else {
                continue;
            };
            if demand == 0 {
                continue;
            }
            let decision = self.table.select(sinr);
            let per_symbol = tb_size_bytes(&self.table, decision, 1, &self.carrier);
            if decision.zero_rate || per_symbol == 0 {
                continue;
            }
            let Some(pid) = self.entity(flow).free_process() else {
                continue;
            };
            let need = self.symbols_for(demand + GRANT_HEADER_BYTES, decision);
            candidates.push(Candidate {
                flow,
                need,
                mcs: decision,
                pid,
                alloc: 0,
            });
        }

        let mut open: Vec<usize> = (0..candidates.len()).collect();
        while remaining > 0 && !open.is_empty() {
            let share = remaining / open.len() as u32;
            let (capped, uncapped): (Vec<usize>, Vec<usize>) = open
                .iter()
                .partition(|&&i| candidates[i].need - candidates[i].alloc <= share);
            if capped.is_empty() {
                let extra = (remaining % open.len() as u32) as usize;
                for (j, &i) in open.iter().enumerate() {
                    candidates[i].alloc += share + u32::from(j < extra);
                }
                break;
            }
            for &i in &capped {
                let c = &mut candidates[i];
                remaining -= c.need - c.alloc;
                c.alloc = c.need;
            }
            open = uncapped;
        }

        for c in candidates.into_iter().filter(|c| c.alloc > 0) {
            dcis.push(Dci {
                cc_id,
                ue_id: c.flow.0,
                bearer_id: c.flow.1,
                n_symbols: c.alloc,
                mcs: c.mcs.mcs,
                tb_size_bytes: tb_size_bytes(&self.table, c.mcs, c.alloc, &self.carrier),
                is_retx: false,
                harq_pid: c.pid,
            });
        }
        debug_assert!(dcis.iter().map(|d| d.n_symbols).sum::<u32>() <= self.carrier.data_symbols());
        dcis
    }

    /// Smallest symbol count whose TB holds `bytes`, capped at the subframe.
    fn symbols_for(&self, bytes: u64, decision: crate::mac::McsDecision) -> u32 {
        let max = self.carrier.data_symbols();
        let per_symbol = tb_size_bytes(&self.table, decision, 1, &self.carrier).max(1) as u64;
        let mut n = bytes.div_ceil(per_symbol).clamp(1, max as u64) as u32;
        while n < max && (tb_size_bytes(&self.table, decision, n, &self.carrier) as u64) < bytes {
            n += 1;
        }
        n
    }

    /// Commits a new-data DCI with the RLC payload it carries; returns the
    /// HARQ generation to echo back in feedback.
    pub fn start_tb(&mut self, dci: &Dci, payload: P) -> u64 {
        debug_assert!(!dci.is_retx);
        self.entity(dci.flow())
            .start(dci.harq_pid, dci.tb_size_bytes, dci.mcs, dci.n_symbols, payload)
    }

    pub fn harq_state(&self, flow: FlowId, pid: u8) -> Option<(u8, u64)> {
        self.harq.get(&flow).map(|h| {
            let p = h.process(pid);
            (p.attempts, p.generation)
        })
    }

    pub fn on_feedback(&mut self, flow: FlowId, pid: u8, generation: u64, outcome: TbOutcome) -> FeedbackResult<P> {
        match self.harq.get_mut(&flow) {
            Some(h) => h.on_feedback(pid, generation, outcome),
            None => FeedbackResult::Stale,
        }
    }

    /// Drops every HARQ process of `flow` (handover, carrier removal).
    pub fn abort_flow(&mut self, flow: FlowId) -> Vec<P> {
        self.harq.get_mut(&flow).map(|h| h.abort_all()).unwrap_or_default()
    }
}
