use crate::error::{Error, Result};

/// Point-to-point link between two base stations: fixed latency plus a FIFO
/// serializer at `datarate_bps`.
#[derive(Debug, Clone, PartialEq)]
pub struct X2Link {
    pub latency_s: f64,
    pub datarate_bps: f64,
    busy_until: f64,
}

impl X2Link {
    pub fn new(latency_s: f64, datarate_bps: f64) -> Result<Self> {
        if !(latency_s >= 0.0) || !(datarate_bps > 0.0) {
            return Err(Error::config(format!(
                "X2 link needs latency >= 0 and datarate > 0, got {latency_s} s / {datarate_bps} bit/s"
            )));
        }
        Ok(X2Link {
            latency_s,
            datarate_bps,
            busy_until: 0.0,
        })
    }

    /// Bytes still queued in the serializer at time `t`.
    pub fn backlog_bytes(&self, t: f64) -> f64 {
        (self.busy_until - t).max(0.0) * self.datarate_bps / 8.0
    }

    pub fn deliver(&mut self, pdu_bytes: u32, send_time: f64) -> f64 {
        x2_deliver(self, pdu_bytes, send_time)
    }
}

/// Arrival time of a PDU sent at `send_time`, queued behind the backlog.
pub fn x2_deliver(link: &mut X2Link, pdu_bytes: u32, send_time: f64) -> f64 {
    debug_assert!(pdu_bytes > 0);
    let start = link.busy_until.max(send_time);
    link.busy_until = start + pdu_bytes as f64 * 8.0 / link.datarate_bps;
    link.busy_until + link.latency_s
}
