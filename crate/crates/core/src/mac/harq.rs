use super::McsTable;
use crate::sim::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbOutcome {
    Ack,
    Nack,
}

impl TbOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TbOutcome::Ack => "ACK",
            TbOutcome::Nack => "NACK",
        }
    }
}

/// Decodes one transport block: NACK with probability `bler(sinr, mcs)`.
/// Exactly one uniform is drawn.
pub fn transport_outcome(table: &McsTable<f64>, mcs: u8, sinr_db: f64, rng: &mut RngStream) -> TbOutcome {
    if rng.uniform() < table.bler(sinr_db, mcs) {
        TbOutcome::Nack
    } else {
        TbOutcome::Ack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarqState {
    Idle,
    AwaitingFeedback,
    PendingRetx,
}

/// One stop-and-wait process holding the transport block until it is
/// acknowledged or dropped.
#[derive(Debug, Clone)]
pub struct HarqProcess<P> {
    pub harq_pid: u8,
    pub attempts: u8,
    pub max_attempts: u8,
    pub pending_tb: u32,
    pub state: HarqState,
    /// Incremented on every new TB so stale feedback can be recognised.
    pub generation: u64,
    pub mcs: u8,
    pub n_symbols: u32,
    payload: Option<P>,
}

#[derive(Debug)]
pub enum FeedbackResult<P> {
    Delivered(P),
    Retransmit,
    /// HARQ gave up after `max_attempts`; emitted once per TB.
    Dropped(P),
    /// Feedback for a process that was reset or reused meanwhile.
    Stale,
}

/// All HARQ processes of one flow on one carrier.
#[derive(Debug, Clone)]
pub struct HarqEntity<P> {
    processes: Vec<HarqProcess<P>>,
}

impl<P> HarqEntity<P> {
    pub fn new(n_processes: u8, max_attempts: u8) -> Self {
        HarqEntity {
            processes: (0..n_processes)
                .map(|pid| HarqProcess {
                    harq_pid: pid,
                    attempts: 0,
                    max_attempts,
                    pending_tb: 0,
                    state: HarqState::Idle,
                    generation: 0,
                    mcs: 0,
                    n_symbols: 0,
                    payload: None,
                })
                .collect(),
        }
    }

    pub fn process(&self, pid: u8) -> &HarqProcess<P> {
        &self.processes[pid as usize]
    }

    pub fn free_process(&self) -> Option<u8> {
        self.processes
            .iter()
            .find(|p| p.state == HarqState::Idle)
            .map(|p| p.harq_pid)
    }

    pub fn pending_retx(&self) -> impl Iterator<Item = &HarqProcess<P>> {
        self.processes.iter().filter(|p| p.state == HarqState::PendingRetx)
    }

    pub fn has_pending_retx(&self) -> bool {
        self.pending_retx().next().is_some()
    }

    /// Starts a new TB on an idle process; returns its generation.
    pub fn start(&mut self, pid: u8, tb_bytes: u32, mcs: u8, n_symbols: u32, payload: P) -> u64 {
        let p = &mut self.processes[pid as usize];
        assert_eq!(p.state, HarqState::Idle, "HARQ process {pid} busy");
        p.generation += 1;
        p.attempts = 1;
        p.pending_tb = tb_bytes;
        p.mcs = mcs;
        p.n_symbols = n_symbols;
        p.state = HarqState::AwaitingFeedback;
        p.payload = Some(payload);
        p.generation
    }

    /// Marks a pending retransmission as sent; returns the new attempt number.
    pub fn retransmit(&mut self, pid: u8) -> u8 {
        let p = &mut self.processes[pid as usize];
        assert_eq!(p.state, HarqState::PendingRetx);
        p.attempts += 1;
        p.state = HarqState::AwaitingFeedback;
        p.attempts
    }

    pub fn on_feedback(&mut self, pid: u8, generation: u64, outcome: TbOutcome) -> FeedbackResult<P> {
        let p = &mut self.processes[pid as usize];
        if p.generation != generation || p.state != HarqState::AwaitingFeedback {
            return FeedbackResult::Stale;
        }
        match outcome {
            TbOutcome::Ack => {
                p.state = HarqState::Idle;
                FeedbackResult::Delivered(p.payload.take().expect("payload held while awaiting feedback"))
            }
            TbOutcome::Nack if p.attempts >= p.max_attempts => {
                p.state = HarqState::Idle;
                FeedbackResult::Dropped(p.payload.take().expect("payload held while awaiting feedback"))
            }
            TbOutcome::Nack => {
                p.state = HarqState::PendingRetx;
                FeedbackResult::Retransmit
            }
        }
    }

    /// Abandons every in-flight TB and hands back their payloads.
    pub fn abort_all(&mut self) -> Vec<P> {
        let mut out = Vec::new();
        for p in &mut self.processes {
            if p.state != HarqState::Idle {
                p.state = HarqState::Idle;
                p.generation += 1;
                out.extend(p.payload.take());
            }
        }
        out
    }

    pub fn is_idle(&self) -> bool {
        self.processes.iter().all(|p| p.state == HarqState::Idle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_above_threshold_always_acks() {
        let t = McsTable::default();
        let mut rng = RngStream::new("harq", 1);
        let thr = t.threshold_db(12);
        let nacks = (0..10_000)
            .filter(|_| transport_outcome(&t, 12, thr + 15.0, &mut rng) == TbOutcome::Nack)
            .count();
        assert_eq!(nacks, 0);
    }

    #[test]
    fn at_threshold_nack_rate_near_ten_percent() {
        let t = McsTable::default();
        let mut rng = RngStream::new("harq", 2);
        let n = 100_000;
        let thr = t.threshold_db(5);
        let nacks = (0..n)
            .filter(|_| transport_outcome(&t, 5, thr, &mut rng) == TbOutcome::Nack)
            .count();
        // binomial sd = sqrt(0.09 / 1e5) ~ 0.00095
        assert!((nacks as f64 / n as f64 - 0.1).abs() < 0.005);
    }

    #[test]
    fn drop_emitted_exactly_once_after_max_attempts() {
        let mut h: HarqEntity<&str> = HarqEntity::new(4, 3);
        let pid = h.free_process().unwrap();
        let gen = h.start(pid, 100, 3, 2, "tb");
        assert!(matches!(h.on_feedback(pid, gen, TbOutcome::Nack), FeedbackResult::Retransmit));
        assert_eq!(h.retransmit(pid), 2);
        assert!(matches!(h.on_feedback(pid, gen, TbOutcome::Nack), FeedbackResult::Retransmit));
        assert_eq!(h.retransmit(pid), 3);
        assert!(matches!(h.on_feedback(pid, gen, TbOutcome::Nack), FeedbackResult::Dropped("tb")));
        // a repeated report is stale, not a second drop
        assert!(matches!(h.on_feedback(pid, gen, TbOutcome::Nack), FeedbackResult::Stale));
        assert!(h.is_idle());
    }

    #[test]
    fn ack_releases_payload_and_abort_invalidates_feedback() {
        let mut h: HarqEntity<u32> = HarqEntity::new(2, 3);
        let g0 = h.start(0, 10, 1, 1, 7);
        let g1 = h.start(1, 10, 1, 1, 8);
        assert!(matches!(h.on_feedback(0, g0, TbOutcome::Ack), FeedbackResult::Delivered(7)));
        assert_eq!(h.abort_all(), vec![8]);
        assert!(matches!(h.on_feedback(1, g1, TbOutcome::Ack), FeedbackResult::Stale));
        assert!(h.process(1).attempts <= h.process(1).max_attempts);
    }
}
