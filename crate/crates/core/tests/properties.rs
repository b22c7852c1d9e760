use std::collections::BTreeMap;

use mmwave_mc::ca::BufferStatusReport;
use mmwave_mc::channel::CarrierConfig;
use mmwave_mc::mac::{CarrierScheduler, MacParams, McsTable, TbOutcome};
use mmwave_mc::rlc::{Leg, PdcpPdu, RlcEntity, RlcEvent, RlcMode, RoutingPolicy, SplitBearer};
use mmwave_mc::scenario::{walk_step, MobilityState};
use mmwave_mc::sim::{Engine, EventTag, RngStream};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tick(usize);

impl EventTag for Tick {
    fn tag(&self) -> &'static str {
        "tick"
    }
}

fn pdu(sn: u64, bytes: u32) -> PdcpPdu {
    PdcpPdu {
        sn,
        bearer_id: 0,
        payload_bytes: bytes,
        enqueue_time: 0.0,
    }
}

proptest! {
    #[test]
    fn engine_fires_in_time_order_with_fifo_ties(slots in prop::collection::vec(0u8..20, 1..200)) {
        let mut eng = Engine::with_horizon(10.0);
        for (i, s) in slots.iter().enumerate() {
            eng.schedule_at(f64::from(*s) * 0.1, Tick(i)).unwrap();
        }
        let mut fired = Vec::new();
        eng.run_until(10.0, |_, ev| {
            fired.push((ev.fire_time, ev.payload.0));
            Ok::<_, String>(())
        })
        .unwrap();
        let mut expected: Vec<(f64, usize)> = slots.iter().enumerate().map(|(i, s)| (f64::from(*s) * 0.1, i)).collect();
        expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        prop_assert_eq!(fired, expected);
    }

    #[test]
    fn pdcp_delivers_any_permutation_once_in_order(
        order in Just((0u64..64).collect::<Vec<_>>()).prop_shuffle(),
        dup in prop::collection::vec(0u64..64, 0..10),
    ) {
        let mut bearer = SplitBearer::new(0, RoutingPolicy::MmwaveWithFallback, 1.0);
        let mut delivered = Vec::new();
        let mut dups = 0;
        for (i, sn) in order.iter().enumerate() {
            let out = bearer.receive(pdu(*sn, 100), i as f64 * 1e-3);
            delivered.extend(out.delivered.iter().map(|p| p.sn));
            prop_assert!(out.lost.is_empty());
        }
        for sn in &dup {
            let out = bearer.receive(pdu(*sn, 100), 0.1);
            prop_assert!(out.duplicate);
            prop_assert!(out.delivered.is_empty());
            dups += 1;
        }
        prop_assert_eq!(delivered, (0..64).collect::<Vec<_>>());
        prop_assert_eq!(bearer.rx_expected_sn(), 64);
        prop_assert_eq!(bearer.duplicates(), dups);
    }

    #[test]
    fn random_walk_never_leaves_the_disc(
        seed in any::<u64>(),
        radius in 1.0f64..200.0,
        speed in 0.1f64..50.0,
        dt in 1e-3f64..1.0,
    ) {
        let mut rng = RngStream::new("walk", seed);
        let mut s = MobilityState::random_walk([0.0, 0.0], speed, 0.5, radius, &mut rng);
        for _ in 0..200 {
            let next = walk_step(&s, dt, &mut rng);
            prop_assert!(next.position[0].hypot(next.position[1]) <= radius * (1.0 + 1e-9));
            let moved = (next.position[0] - s.position[0]).hypot(next.position[1] - s.position[1]);
            prop_assert!(moved <= speed * dt * (1.0 + 1e-9));
            s = next;
        }
    }

    #[test]
    fn rlc_am_delivers_every_sdu_exactly_once(
        sizes in prop::collection::vec(1u32..5000, 1..40),
        grants in prop::collection::vec(1u32..6000, 1..50),
        acks in prop::collection::vec(any::<bool>(), 1..50),
    ) {
        let mut rlc = RlcEntity::new(RlcMode::Am, 0, Leg::Mmwave);
        for (sn, b) in sizes.iter().enumerate() {
            rlc.enqueue(pdu(sn as u64, *b));
        }
        let mut delivered = Vec::new();
        let mut round = 0usize;
        while !rlc.is_empty() {
            prop_assert!(round < 100_000, "no progress");
            let grant = grants[round % grants.len()];
            // NACKs only in the first rounds so the run terminates
            let nack_ok = round < 200;
            for p in rlc.tx_opportunity(grant) {
                prop_assert!(p.size() <= grant);
                let outcome = if nack_ok && !acks[round % acks.len()] { TbOutcome::Nack } else { TbOutcome::Ack };
                match rlc.feedback(p.pdu_id, outcome) {
                    Some(RlcEvent::Delivered(d)) => delivered.push(d.sn),
                    Some(RlcEvent::Lost(_)) => prop_assert!(false, "AM lost an SDU"),
                    _ => {}
                }
            }
            round += 1;
        }
        delivered.sort_unstable();
        prop_assert_eq!(delivered, (0..sizes.len() as u64).collect::<Vec<_>>());
        prop_assert_eq!(rlc.unknown_feedback(), 0);
    }

    #[test]
    fn scheduler_never_overbooks_the_subframe(
        demands in prop::collection::vec(0u64..2_000_000, 1..12),
        sinrs in prop::collection::vec(-10.0f64..35.0, 12),
        outcomes in prop::collection::vec(any::<bool>(), 1..64),
    ) {
        let carrier = CarrierConfig::mmwave(0, 28.0, 200.0, 1);
        let data = carrier.data_symbols();
        let mut s: CarrierScheduler<()> = CarrierScheduler::new(carrier, McsTable::default(), MacParams::default());
        let table: BTreeMap<_, _> = demands
            .iter()
            .enumerate()
            .map(|(u, d)| {
                let u = u as u32;
                ((u, u), BufferStatusReport { ue_id: u, bearer_id: u, tx_queue_bytes: *d, ..Default::default() })
            })
            .collect();
        let sinr: BTreeMap<u32, f64> = sinrs.iter().enumerate().map(|(u, x)| (u as u32, *x)).collect();
        let mut k = 0;
        for _ in 0..10 {
            let dcis = s.schedule_subframe(&table, &sinr);
            prop_assert!(dcis.iter().map(|d| d.n_symbols).sum::<u32>() <= data);
            let mut seen = std::collections::BTreeSet::new();
            for d in &dcis {
                prop_assert!(seen.insert(d.flow()), "flow scheduled twice");
                prop_assert!(d.n_symbols > 0);
                let gen = if d.is_retx {
                    s.harq_state(d.flow(), d.harq_pid).unwrap().1
                } else {
                    s.start_tb(d, ())
                };
                let outcome = if outcomes[k % outcomes.len()] { TbOutcome::Ack } else { TbOutcome::Nack };
                k += 1;
                s.on_feedback(d.flow(), d.harq_pid, gen, outcome);
            }
        }
    }
}
