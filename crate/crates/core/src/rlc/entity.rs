use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::PdcpPdu;
use crate::ca::BufferStatusReport;
use crate::error::{Error, Result};
use crate::mac::TbOutcome;

/// Fixed per-PDU RLC header.
pub const RLC_HEADER_BYTES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RlcMode {
    /// Saturation mode: an infinite queue of fabricated payload.
    #[default]
    Sm,
    Um,
    Am,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leg {
    Lte,
    Mmwave,
}

impl Leg {
    pub fn as_str(self) -> &'static str {
        match self {
            Leg::Lte => "LTE",
            Leg::Mmwave => "MMWAVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    /// AM: every buffered PDU, transmitted or not, moves to the target.
    Lossless,
    /// UM: only never-transmitted PDUs move; the rest are discarded.
    Seamless,
}

/// One RLC PDU handed to the MAC: a segment of a PDCP PDU (or fabricated
/// payload in SM).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RlcPdu {
    pub pdu_id: u64,
    pub sn: Option<u64>,
    pub offset: u32,
    pub payload_bytes: u32,
    pub header_bytes: u32,
}

impl RlcPdu {
    pub fn size(&self) -> u32 {
        self.payload_bytes + self.header_bytes
    }
}

/// What an RLC feedback produced for the layers above.
#[derive(Debug, Clone, PartialEq)]
pub enum RlcEvent {
    /// A PDCP PDU is complete at the receiver.
    Delivered(PdcpPdu),
    /// Fabricated SM payload received.
    SaturationDelivered { bytes: u32 },
    /// A PDCP PDU can no longer be completed (UM after a MAC drop).
    Lost(PdcpPdu),
    SaturationLost { bytes: u32 },
    /// An AM segment was queued for retransmission.
    Retransmission { sn: u64, bytes: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Segment {
    sn: u64,
    offset: u32,
    len: u32,
}

#[derive(Debug, Clone)]
struct SduState {
    pdu: PdcpPdu,
    /// Bytes `[0, sent)` have been handed to the MAC at least once.
    sent: u32,
    acked: u32,
}

/// Result of [`RlcEntity::handover_forward`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Forwarded {
    pub forwarded: Vec<PdcpPdu>,
    /// Transmitted PDUs left behind (seamless mode).
    pub discarded: Vec<PdcpPdu>,
}

/// Transmit side of one RLC entity plus the receiver's completion tracking.
///
/// PDUs stay accounted for until the MAC reports their fate, in every mode:
/// an SDU counts as delivered when its last byte is acknowledged.
#[derive(Debug, Clone)]
pub struct RlcEntity {
    pub mode: RlcMode,
    pub bearer_id: u32,
    pub leg: Leg,
    saturation_bytes: u64,
    next_pdu_id: u64,
    /// SNs with untransmitted bytes, in arrival order.
    tx_order: VecDeque<u64>,
    sdus: BTreeMap<u64, SduState>,
    retx: VecDeque<Segment>,
    in_flight: HashMap<u64, Segment>,
    sm_in_flight: HashMap<u64, u32>,
    unknown_feedback: u64,
}

impl RlcEntity {
    pub fn new(mode: RlcMode, bearer_id: u32, leg: Leg) -> Self {
        RlcEntity {
            mode,
            bearer_id,
            leg,
            saturation_bytes: 10_000_000,
            next_pdu_id: 0,
            tx_order: VecDeque::new(),
            sdus: BTreeMap::new(),
            retx: VecDeque::new(),
            in_flight: HashMap::new(),
            sm_in_flight: HashMap::new(),
            unknown_feedback: 0,
        }
    }

    pub fn with_saturation(mut self, bytes: u64) -> Self {
        self.saturation_bytes = bytes;
        self
    }

    /// Feedback reports for PDUs this entity does not know (duplicates,
    /// PDUs from before a buffer flush).
    pub fn unknown_feedback(&self) -> u64 {
        self.unknown_feedback
    }

    pub fn enqueue(&mut self, pdu: PdcpPdu) {
        debug_assert!(pdu.payload_bytes > 0);
        debug_assert!(self.mode != RlcMode::Sm, "SM entities fabricate their own payload");
        self.tx_order.push_back(pdu.sn);
        self.sdus.insert(
            pdu.sn,
            SduState {
                pdu,
                sent: 0,
                acked: 0,
            },
        );
    }

    /// Number of PDCP PDUs currently held, in any state.
    pub fn buffered_sdus(&self) -> usize {
        self.sdus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sdus.is_empty() && self.sm_in_flight.is_empty()
    }

    pub fn generate_bsr(&self, ue_id: u32) -> BufferStatusReport {
        let (tx, retx) = match self.mode {
            RlcMode::Sm => (self.saturation_bytes, 0),
            _ => {
                let tx = self
                    .tx_order
                    .iter()
                    .map(|sn| {
                        let s = &self.sdus[sn];
                        (s.pdu.payload_bytes - s.sent) as u64
                    })
                    .sum();
                let retx = self.retx.iter().map(|s| s.len as u64).sum();
                (tx, retx)
            }
        };
        BufferStatusReport {
            ue_id,
            bearer_id: self.bearer_id,
            tx_queue_bytes: tx,
            retx_queue_bytes: retx,
            status_pdu_bytes: 0,
        }
    }

    fn next_id(&mut self) -> u64 {
        let id = self.next_pdu_id;
        self.next_pdu_id += 1;
        id
    }

    /// Fills a MAC grant of `grant_bytes`. AM retransmissions first, then new
    /// data; each PDU carries one segment and a fixed header.
    pub fn tx_opportunity(&mut self, grant_bytes: u32) -> Vec<RlcPdu> {
        let mut out = Vec::new();
        if grant_bytes == 0 {
            return out;
        }
        if self.mode == RlcMode::Sm {
            let id = self.next_id();
            self.sm_in_flight.insert(id, grant_bytes);
            out.push(RlcPdu {
                pdu_id: id,
                sn: None,
                offset: 0,
                payload_bytes: grant_bytes,
                header_bytes: 0,
            });
            return out;
        }
        let mut room = grant_bytes;
        while room > RLC_HEADER_BYTES {
            let space = room - RLC_HEADER_BYTES;
            let seg = if let Some(mut seg) = self.retx.pop_front() {
                if !self.sdus.contains_key(&seg.sn) {
                    continue;
                }
                if seg.len > space {
                    self.retx.push_front(Segment {
                        sn: seg.sn,
                        offset: seg.offset + space,
                        len: seg.len - space,
                    });
                    seg.len = space;
                }
                seg
            } else if let Some(&sn) = self.tx_order.front() {
                let s = self.sdus.get_mut(&sn).expect("queued SDU is held");
                let len = (s.pdu.payload_bytes - s.sent).min(space);
                let seg = Segment {
                    sn,
                    offset: s.sent,
                    len,
                };
                s.sent += len;
                if s.sent == s.pdu.payload_bytes {
                    self.tx_order.pop_front();
                }
                seg
            } else {
                break;
            };
            let id = self.next_id();
            self.in_flight.insert(id, seg);
            out.push(RlcPdu {
                pdu_id: id,
                sn: Some(seg.sn),
                offset: seg.offset,
                payload_bytes: seg.len,
                header_bytes: RLC_HEADER_BYTES,
            });
            room -= seg.len + RLC_HEADER_BYTES;
        }
        out
    }

    /// MAC outcome for one PDU: `Ack` once the TB is decoded, `Nack` when
    /// HARQ gave up on it.
    pub fn feedback(&mut self, pdu_id: u64, outcome: TbOutcome) -> Option<RlcEvent> {
        if self.mode == RlcMode::Sm {
            let Some(bytes) = self.sm_in_flight.remove(&pdu_id) else {
                self.unknown_feedback += 1;
                return None;
            };
            return Some(match outcome {
                TbOutcome::Ack => RlcEvent::SaturationDelivered { bytes },
                TbOutcome::Nack => RlcEvent::SaturationLost { bytes },
            });
        }
        let Some(seg) = self.in_flight.remove(&pdu_id) else {
            self.unknown_feedback += 1;
            return None;
        };
        // the SDU may already be gone (UM loss of a sibling segment)
        let state = self.sdus.get_mut(&seg.sn)?;
        match outcome {
            TbOutcome::Ack => {
                state.acked += seg.len;
                if state.acked >= state.pdu.payload_bytes {
                    let done = self.sdus.remove(&seg.sn).expect("present");
                    return Some(RlcEvent::Delivered(done.pdu));
                }
                None
            }
            TbOutcome::Nack => match self.mode {
                RlcMode::Am => {
                    self.retx.push_back(seg);
                    Some(RlcEvent::Retransmission {
                        sn: seg.sn,
                        bytes: seg.len,
                    })
                }
                _ => {
                    let lost = self.sdus.remove(&seg.sn).expect("present");
                    self.tx_order.retain(|&sn| sn != seg.sn);
                    Some(RlcEvent::Lost(lost.pdu))
                }
            },
        }
    }

    /// Empties the entity for a secondary-cell handover.
    pub fn handover_forward(&mut self, mode: ForwardMode) -> Result<Forwarded> {
        match (mode, self.mode) {
            (_, RlcMode::Sm) => return Err(Error::config("SM bearers cannot be handed over")),
            (ForwardMode::Lossless, RlcMode::Um) => {
                return Err(Error::config("lossless forwarding requires RLC AM"))
            }
            _ => {}
        }
        let mut out = Forwarded::default();
        for (_, s) in std::mem::take(&mut self.sdus) {
            if mode == ForwardMode::Lossless || s.sent == 0 {
                out.forwarded.push(s.pdu);
            } else {
                out.discarded.push(s.pdu);
            }
        }
        self.clear_transmit_state();
        Ok(out)
    }

    /// Hands back every held PDU regardless of mode (leg switch on fallback
    /// or recovery, where no SDU may be lost).
    pub fn drain_all(&mut self) -> Vec<PdcpPdu> {
        let out = std::mem::take(&mut self.sdus).into_values().map(|s| s.pdu).collect();
        self.clear_transmit_state();
        out
    }

    fn clear_transmit_state(&mut self) {
        self.tx_order.clear();
        self.retx.clear();
        self.in_flight.clear();
        self.sm_in_flight.clear();
    }
}
