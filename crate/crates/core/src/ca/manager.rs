use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{largest_remainder_split, BufferStatusReport};
use crate::channel::CarrierConfig;
use crate::error::{Error, Result};

/// Ordered carriers of one cell/UE with a designated primary.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierSet {
    carriers: Vec<CarrierConfig>,
    primary_cc_id: u8,
}

impl CarrierSet {
    pub fn new(carriers: Vec<CarrierConfig>, primary_cc_id: u8) -> Result<Self> {
        if carriers.is_empty() {
            return Err(Error::config("carrier set is empty"));
        }
        let mut seen = HashSet::new();
        for c in &carriers {
            if !seen.insert(c.cc_id) {
                return Err(Error::config(format!("duplicate cc_id {}", c.cc_id)));
            }
        }
        if !seen.contains(&primary_cc_id) {
            return Err(Error::config(format!("primary cc{primary_cc_id} not in carrier set")));
        }
        Ok(CarrierSet {
            carriers,
            primary_cc_id,
        })
    }

    /// Uses the carrier flagged `is_primary` (or the first one).
    pub fn from_carriers(carriers: Vec<CarrierConfig>) -> Result<Self> {
        let primary = carriers
            .iter()
            .find(|c| c.is_primary)
            .or(carriers.first())
            .map(|c| c.cc_id)
            .unwrap_or(0);
        Self::new(carriers, primary)
    }

    pub fn carriers(&self) -> &[CarrierConfig] {
        &self.carriers
    }

    pub fn primary_cc_id(&self) -> u8 {
        self.primary_cc_id
    }

    pub fn len(&self) -> usize {
        self.carriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carriers.is_empty()
    }

    pub fn contains(&self, cc_id: u8) -> bool {
        self.carriers.iter().any(|c| c.cc_id == cc_id)
    }

    /// Carrier ids in ascending order.
    pub fn cc_ids(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self.carriers.iter().map(|c| c.cc_id).collect();
        ids.sort_unstable();
        ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CcManagerPolicy {
    Noop,
    #[default]
    RoundRobin,
    BandwidthAware,
}

impl CcManagerPolicy {
    pub fn split(self, bsr: &BufferStatusReport, set: &CarrierSet) -> Result<BTreeMap<u8, BufferStatusReport>> {
        match self {
            CcManagerPolicy::Noop => split_bsr_noop(bsr, set),
            CcManagerPolicy::RoundRobin => Ok(split_bsr_round_robin(bsr, set)),
            CcManagerPolicy::BandwidthAware => Ok(split_bsr_bandwidth_aware(bsr, set)),
        }
    }
}

/// Single-carrier manager: the whole report goes to the only carrier.
pub fn split_bsr_noop(bsr: &BufferStatusReport, set: &CarrierSet) -> Result<BTreeMap<u8, BufferStatusReport>> {
    if set.len() != 1 {
        return Err(Error::config(format!(
            "noop carrier manager needs exactly one carrier, got {}",
            set.len()
        )));
    }
    Ok(BTreeMap::from([(set.carriers()[0].cc_id, *bsr)]))
}

/// Equal split; leftover bytes go one each to the lowest cc_ids.
pub fn split_bsr_round_robin(bsr: &BufferStatusReport, set: &CarrierSet) -> BTreeMap<u8, BufferStatusReport> {
    let ids = set.cc_ids();
    split_weighted(bsr, &ids, &vec![1; ids.len()])
}

/// Split in proportion to carrier bandwidth.
pub fn split_bsr_bandwidth_aware(bsr: &BufferStatusReport, set: &CarrierSet) -> BTreeMap<u8, BufferStatusReport> {
    let ids = set.cc_ids();
    let weights: Vec<u64> = ids
        .iter()
        .map(|id| {
            let c = set.carriers().iter().find(|c| c.cc_id == *id).expect("id from set");
            (c.bandwidth_hz().round() as u64).max(1)
        })
        .collect();
    split_weighted(bsr, &ids, &weights)
}

fn split_weighted(bsr: &BufferStatusReport, ids: &[u8], weights: &[u64]) -> BTreeMap<u8, BufferStatusReport> {
    let tx = largest_remainder_split(bsr.tx_queue_bytes, weights);
    let retx = largest_remainder_split(bsr.retx_queue_bytes, weights);
    let status = largest_remainder_split(bsr.status_pdu_bytes, weights);
    ids.iter()
        .enumerate()
        .map(|(i, &id)| (id, bsr.with_fields(tx[i], retx[i], status[i])))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlMessage {
    BufferStatusReport,
    MeasurementReport,
    HarqFeedback,
    RrcReconfiguration,
}

impl ControlMessage {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlMessage::BufferStatusReport => "BSR",
            ControlMessage::MeasurementReport => "MEAS_REPORT",
            ControlMessage::HarqFeedback => "HARQ_FB",
            ControlMessage::RrcReconfiguration => "RRC_RECONF",
        }
    }
}

/// All control signalling rides the primary carrier.
pub fn route_control(_msg: ControlMessage, set: &CarrierSet) -> u8 {
    set.primary_cc_id()
}

/// A carrier-set change that takes effect at `effective_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconfiguration {
    pub ue_id: u32,
    pub new_set: CarrierSet,
    pub effective_time: f64,
}

/// Per-UE carrier sets plus the split policy.
#[derive(Debug, Clone)]
pub struct CcManager {
    policy: CcManagerPolicy,
    reconfiguration_delay_s: f64,
    sets: BTreeMap<u32, CarrierSet>,
}

impl CcManager {
    pub fn new(policy: CcManagerPolicy, reconfiguration_delay_s: f64) -> Self {
        CcManager {
            policy,
            reconfiguration_delay_s,
            sets: BTreeMap::new(),
        }
    }

    pub fn policy(&self) -> CcManagerPolicy {
        self.policy
    }

    /// Registers a UE after RRC connection on its initial carriers.
    pub fn attach(&mut self, ue_id: u32, set: CarrierSet) -> Result<()> {
        if self.policy == CcManagerPolicy::Noop && set.len() != 1 {
            return Err(Error::config("noop carrier manager cannot serve more than one carrier"));
        }
        self.sets.insert(ue_id, set);
        Ok(())
    }

    pub fn carrier_set(&self, ue_id: u32) -> Option<&CarrierSet> {
        self.sets.get(&ue_id)
    }

    pub fn split(&self, bsr: &BufferStatusReport) -> Result<BTreeMap<u8, BufferStatusReport>> {
        let set = self
            .sets
            .get(&bsr.ue_id)
            .ok_or_else(|| Error::config(format!("UE {} not attached to the carrier manager", bsr.ue_id)))?;
        self.policy.split(bsr, set)
    }

    /// Validates an RRC reconfiguration; it becomes active after the
    /// configured delay via [`Self::apply`].
    pub fn reconfigure_carriers(&self, ue_id: u32, new_set: CarrierSet, at_time: f64) -> Result<Reconfiguration> {
        let current = self
            .sets
            .get(&ue_id)
            .ok_or_else(|| Error::config(format!("UE {ue_id} is not attached")))?;
        if !new_set.contains(current.primary_cc_id()) {
            return Err(Error::config(format!(
                "reconfiguration for UE {ue_id} removes the primary cc{}",
                current.primary_cc_id()
            )));
        }
        if new_set.primary_cc_id() != current.primary_cc_id() {
            return Err(Error::config("the primary carrier cannot change mid-session"));
        }
        if self.policy == CcManagerPolicy::Noop && new_set.len() != 1 {
            return Err(Error::config("noop carrier manager cannot serve more than one carrier"));
        }
        Ok(Reconfiguration {
            ue_id,
            new_set,
            effective_time: at_time + self.reconfiguration_delay_s,
        })
    }

    /// Returns the carriers removed for this UE.
    pub fn apply(&mut self, reconf: Reconfiguration) -> Vec<u8> {
        let removed = self
            .sets
            .get(&reconf.ue_id)
            .map(|old| old.cc_ids().into_iter().filter(|id| !reconf.new_set.contains(*id)).collect())
            .unwrap_or_default();
        self.sets.insert(reconf.ue_id, reconf.new_set);
        removed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(bws: &[f64]) -> CarrierSet {
        let carriers = bws
            .iter()
            .enumerate()
            .map(|(i, &b)| CarrierConfig::mmwave(i as u8, 30.0 + 2.0 * i as f64, b, 1))
            .collect();
        CarrierSet::new(carriers, 0).unwrap()
    }

    fn bsr(tx: u64) -> BufferStatusReport {
        BufferStatusReport {
            ue_id: 0,
            bearer_id: 0,
            tx_queue_bytes: tx,
            ..Default::default()
        }
    }

    fn tx(m: &BTreeMap<u8, BufferStatusReport>) -> Vec<u64> {
        m.values().map(|b| b.tx_queue_bytes).collect()
    }

    #[test]
    fn noop_examples() {
        assert_eq!(tx(&split_bsr_noop(&bsr(1000), &set(&[500.0])).unwrap()), vec![1000]);
        assert_eq!(tx(&split_bsr_noop(&bsr(0), &set(&[500.0])).unwrap()), vec![0]);
        assert!(split_bsr_noop(&bsr(1000), &set(&[500.0, 500.0])).is_err());
    }

    #[test]
    fn round_robin_examples() {
        assert_eq!(tx(&split_bsr_round_robin(&bsr(1000), &set(&[500.0, 500.0]))), vec![500, 500]);
        assert_eq!(tx(&split_bsr_round_robin(&bsr(1001), &set(&[500.0, 500.0]))), vec![501, 500]);
        assert_eq!(tx(&split_bsr_round_robin(&bsr(10), &set(&[1.0, 1.0, 1.0]))), vec![4, 3, 3]);
    }

    #[test]
    fn bandwidth_aware_examples() {
        assert_eq!(tx(&split_bsr_bandwidth_aware(&bsr(1000), &set(&[800.0, 200.0]))), vec![800, 200]);
        assert_eq!(tx(&split_bsr_bandwidth_aware(&bsr(1000), &set(&[500.0, 500.0]))), vec![500, 500]);
        assert_eq!(tx(&split_bsr_bandwidth_aware(&bsr(100), &set(&[889.0, 111.0]))), vec![89, 11]);
    }

    #[test]
    fn control_goes_to_primary() {
        let s = set(&[500.0, 500.0]);
        assert_eq!(route_control(ControlMessage::BufferStatusReport, &s), 0);
        let s1 = CarrierSet::new(s.carriers().to_vec(), 1).unwrap();
        assert_eq!(route_control(ControlMessage::MeasurementReport, &s1), 1);
        assert_eq!(route_control(ControlMessage::HarqFeedback, &set(&[100.0])), 0);
    }

    #[test]
    fn carrier_set_invariants() {
        let c = CarrierConfig::mmwave(0, 28.0, 100.0, 1);
        assert!(CarrierSet::new(vec![], 0).is_err());
        assert!(CarrierSet::new(vec![c.clone(), c.clone()], 0).is_err());
        assert!(CarrierSet::new(vec![c], 3).is_err());
    }

    #[test]
    fn reconfiguration_rules() {
        let mut m = CcManager::new(CcManagerPolicy::RoundRobin, 0.01);
        let both = set(&[500.0, 500.0]);
        let only0 = CarrierSet::new(vec![both.carriers()[0].clone()], 0).unwrap();
        m.attach(0, only0.clone()).unwrap();
        let add = m.reconfigure_carriers(0, both.clone(), 1.0).unwrap();
        assert!((add.effective_time - 1.01).abs() < 1e-12);
        assert!(m.apply(add).is_empty());
        // removing cc1 conserves demand: all of it lands on cc0
        let rm = m.reconfigure_carriers(0, only0, 2.0).unwrap();
        assert_eq!(m.apply(rm), vec![1]);
        let split = m.split(&bsr(5000)).unwrap();
        assert_eq!(tx(&split), vec![5000]);
        // dropping the primary is refused
        let only1 = CarrierSet::new(vec![both.carriers()[1].clone()], 1).unwrap();
        assert!(m.reconfigure_carriers(0, only1, 3.0).is_err());
    }

    proptest! {
        #[test]
        fn every_policy_conserves_field_by_field(
            tx in 0u64..100_000_000, retx in 0u64..1_000_000, st in 0u64..10_000,
            bws in prop::collection::vec(1.0f64..2000.0, 1..5),
        ) {
            let s = set(&bws);
            let b = BufferStatusReport { ue_id: 1, bearer_id: 2, tx_queue_bytes: tx, retx_queue_bytes: retx, status_pdu_bytes: st };
            for out in [split_bsr_round_robin(&b, &s), split_bsr_bandwidth_aware(&b, &s)] {
                prop_assert_eq!(out.values().map(|x| x.tx_queue_bytes).sum::<u64>(), tx);
                prop_assert_eq!(out.values().map(|x| x.retx_queue_bytes).sum::<u64>(), retx);
                prop_assert_eq!(out.values().map(|x| x.status_pdu_bytes).sum::<u64>(), st);
            }
        }

        #[test]
        fn equal_bandwidth_degenerates_to_round_robin(tx in 0u64..10_000_000, n in 1usize..5, bw in 10.0f64..1000.0) {
            let s = set(&vec![bw; n]);
            prop_assert_eq!(split_bsr_bandwidth_aware(&bsr(tx), &s), split_bsr_round_robin(&bsr(tx), &s));
        }
    }
}
