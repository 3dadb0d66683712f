use medledger_sim::{
    run_simulation, Fault, Latency, ScheduledFault, SimConfig, SimError, Simulation,
};

fn config(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        target_height: 20,
        ..Default::default()
    }
}

fn with_fault(seed: u64, node: &str, fault: Fault, at_height: u64) -> SimConfig {
    SimConfig {
        faults: vec![ScheduledFault {
            at_height,
            node: node.into(),
            fault,
        }],
        ..config(seed)
    }
}

#[test]
fn fault_free_run_agrees() {
    let r = run_simulation(config(1)).unwrap();
    assert!(r.reached_target);
    assert!(!r.divergence);
    let roots: Vec<_> = r
        .nodes
        .iter()
        .map(|n| (n.committed_height, n.state_root))
        .collect();
    assert!(roots.windows(2).all(|w| w[0] == w[1]), "{roots:?}");
    assert!(r.skipped_slots.is_empty());
    let rejected: u64 = r.nodes.iter().flat_map(|n| n.rejections.values()).sum();
    assert_eq!(rejected, 0, "{:?}", r.nodes[0].rejections);
}

#[test]
fn crashed_authority_is_skipped() {
    let base = run_simulation(config(2)).unwrap();
    let r = run_simulation(with_fault(2, "a1", Fault::Crashed, 3)).unwrap();
    assert!(r.reached_target);
    assert!(!r.divergence);
    assert!(!r.skipped_slots.is_empty());
    assert!(r.skipped_slots.iter().all(|s| s.round == 0));
    assert!(r.virtual_time_ms > base.virtual_time_ms);
    let crashed = r.nodes.iter().find(|n| n.id == "a1").unwrap();
    assert!(crashed.committed_height < 20);
}

#[test]
fn flooded_node_does_not_stop_the_rest() {
    let r = run_simulation(with_fault(3, "a2", Fault::Flooded, 0)).unwrap();
    assert!(r.reached_target);
    assert!(!r.divergence);
    let flooded = r.nodes.iter().find(|n| n.id == "a2").unwrap();
    assert_eq!(flooded.committed_height, 0);
    assert_eq!(flooded.messages.received, 0);
    assert!(r
        .nodes
        .iter()
        .filter(|n| n.id != "a2")
        .all(|n| n.committed_height >= 20));
}

#[test]
fn equivocation_is_detected_without_divergence() {
    let r = run_simulation(with_fault(4, "a0", Fault::Byzantine, 0)).unwrap();
    assert!(!r.divergence);
    assert!(r.reached_target);
    assert!(r.nodes_with_evidence >= 1);
    let ev = &r
        .nodes
        .iter()
        .find(|n| !n.evidence.is_empty())
        .unwrap()
        .evidence[0];
    assert_ne!(ev.first, ev.second);
}

#[test]
fn sybil_swarm_is_ignored() {
    let r = run_simulation(SimConfig {
        sybil_nodes: 50,
        target_height: 8,
        ..config(5)
    })
    .unwrap();
    assert!(r.reached_target);
    assert!(r.sybil_blocks_sent > 0);
    assert_eq!(r.foreign_blocks_accepted, 0);
    let a0 = &r.nodes[0];
    let refused = a0.rejections.get("WrongProposer").copied().unwrap_or(0)
        + a0.rejections.get("BadSeal").copied().unwrap_or(0);
    assert!(refused > 0, "{:?}", a0.rejections);
}

#[test]
fn crashed_observer_changes_nothing() {
    let mut c = config(6);
    c.observers = 1;
    let base = run_simulation(c.clone()).unwrap();
    c.faults.push(ScheduledFault {
        at_height: 0,
        node: "o0".into(),
        fault: Fault::Crashed,
    });
    let r = run_simulation(c).unwrap();
    assert_eq!(r.nodes[0].committed_height, base.nodes[0].committed_height);
    assert!(r.reached_target && !r.divergence);
}

#[test]
fn same_seed_same_report() {
    let c = with_fault(7, "a3", Fault::Byzantine, 2);
    let a = run_simulation(c.clone()).unwrap().to_json();
    let b = run_simulation(c).unwrap().to_json();
    assert_eq!(a, b);
    let other = run_simulation(with_fault(8, "a3", Fault::Byzantine, 2))
        .unwrap()
        .to_json();
    assert_ne!(a, other);
}

#[test]
fn fixed_latency_runs() {
    let r = run_simulation(SimConfig {
        latency: Latency::Fixed { ms: 40 },
        ..config(9)
    })
    .unwrap();
    assert!(r.reached_target && !r.divergence);
}

#[test]
fn inject_fault_errors() {
    let mut sim = Simulation::new(config(1)).unwrap();
    assert_eq!(
        sim.inject_fault("zz", Fault::Crashed, 1),
        Err(SimError::UnknownNode("zz".into()))
    );
    sim.inject_fault("a1", Fault::Crashed, 4).unwrap();
    let bad = with_fault(1, "nobody", Fault::Crashed, 0);
    assert!(matches!(run_simulation(bad), Err(SimError::UnknownNode(_))));
}

mod safety {
    use super::*;
    use proptest::prelude::*;

    fn fault() -> impl Strategy<Value = Fault> {
        prop_oneof![
            Just(Fault::Crashed),
            Just(Fault::Byzantine),
            Just(Fault::Flooded)
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn one_faulty_authority_never_splits_honest_nodes(
            seed in any::<u64>(),
            node in 0..4usize,
            f in fault(),
            at in 0..6u64,
        ) {
            let mut c = with_fault(seed, &format!("a{node}"), f, at);
            c.target_height = 10;
            c.observers = 1;
            let r = run_simulation(c).unwrap();
            prop_assert!(!r.divergence, "{:?}", r.divergent_heights);
            prop_assert!(r.reached_target);
        }
    }
}
