/// Per-bearer queue report from an RLC entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct BufferStatusReport {
    pub ue_id: u32,
    pub bearer_id: u32,
    pub tx_queue_bytes: u64,
    pub retx_queue_bytes: u64,
    pub status_pdu_bytes: u64,
}

impl BufferStatusReport {
    pub fn total(&self) -> u64 {
        self.tx_queue_bytes + self.retx_queue_bytes + self.status_pdu_bytes
    }

    pub(crate) fn with_fields(&self, tx: u64, retx: u64, status: u64) -> Self {
        BufferStatusReport {
            tx_queue_bytes: tx,
            retx_queue_bytes: retx,
            status_pdu_bytes: status,
            ..*self
        }
    }
}

/// Splits `total` in proportion to `weights` with largest-remainder rounding.
///
/// The result always sums to `total`. Ties in the fractional part go to the
/// lower index, so equal weights hand the remainder to the first entries.
pub fn largest_remainder_split(total: u64, weights: &[u64]) -> Vec<u64> {
    assert!(!weights.is_empty(), "split over no carriers");
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    assert!(sum > 0, "split weights sum to zero");
    let mut shares = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        shares.push((num / sum) as u64);
        remainders.push((num % sum, i));
    }
    let left = total - shares.iter().sum::<u64>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(left as usize) {
        shares[i] += 1;
    }
    shares
}
