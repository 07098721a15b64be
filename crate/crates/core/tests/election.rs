use rwelect::graph::{generate_clique, generate_hypercube, generate_random_regular, generate_ring, Graph};
use rwelect::leader::{budget_for_phases, run_election, run_leader_election, Decision, Outcome, ProtocolConfig};
use rwelect::sim::{SimConfig, Termination};
use std::collections::BTreeSet;

fn sim(cfg: &ProtocolConfig, seed: u64, phases: u32) -> SimConfig {
    SimConfig { seed, round_budget: budget_for_phases(cfg, phases), ..SimConfig::default() }
}

#[test]
fn replay_is_deterministic_on_hypercube_6() {
    let g = generate_hypercube(6, 3).unwrap();
    let cfg = ProtocolConfig::for_n(64);
    let s = SimConfig { record_trace: true, ..sim(&cfg, 17, 6) };
    let (a, ea) = run_election(&g, &cfg, &s).unwrap();
    let (b, eb) = run_election(&g, &cfg, &s).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(ea.trace.unwrap().to_jsonl(), eb.trace.unwrap().to_jsonl());
}

#[test]
fn ledgers_balance_on_assorted_graphs() {
    let graphs: Vec<Graph> = vec![
        generate_hypercube(7, 1).unwrap(),
        generate_clique(48, 2).unwrap(),
        generate_random_regular(200, 4, 3).unwrap(),
        generate_ring(40, 4).unwrap(),
    ];
    for (i, g) in graphs.iter().enumerate() {
        let cfg = ProtocolConfig::for_n(g.n());
        for seed in 0..3 {
            let s = SimConfig { record_trace: true, ..sim(&cfg, seed, 7) };
            let (r, ex) = run_election(g, &cfg, &s).unwrap();
            assert!(r.tokens_conserved, "graph {i} seed {seed}");
            assert_eq!(r.schedule_violations, 0, "graph {i} seed {seed}");
            assert_eq!(r.missing_routes, 0, "graph {i} seed {seed}");
            let trace = ex.trace.unwrap();
            assert_eq!(trace.total_units(), r.total_units);
            assert_eq!(r.metrics.messages_sent, r.metrics.messages_delivered + r.metrics.messages_merged);
        }
    }
}

#[test]
fn replies_retrace_walk_edges() {
    let g = generate_hypercube(8, 5).unwrap();
    let cfg = ProtocolConfig::for_n(256);
    for seed in 0..3 {
        let s = SimConfig { record_trace: true, ..sim(&cfg, seed, 8) };
        let (_, ex) = run_election(&g, &cfg, &s).unwrap();
        let trace = ex.trace.unwrap();
        let forward: BTreeSet<(usize, usize)> =
            trace.envelopes.iter().filter(|e| e.tag == "token").map(|e| (e.from_node, e.to_node)).collect();
        for e in trace.envelopes.iter().filter(|e| matches!(e.tag, "reply1" | "reply3" | "winner_up")) {
            assert!(forward.contains(&(e.to_node, e.from_node)), "{e:?}");
        }
        for e in trace.envelopes.iter().filter(|e| matches!(e.tag, "round2" | "winner_down")) {
            assert!(forward.contains(&(e.from_node, e.to_node)), "{e:?}");
        }
    }
}

#[test]
fn non_contenders_never_originate_walks() {
    let g = generate_hypercube(7, 2).unwrap();
    let cfg = ProtocolConfig::for_n(128);
    let (_, ex) = run_election(&g, &cfg, &sim(&cfg, 4, 6)).unwrap();
    let contender_ids: BTreeSet<u64> = ex.nodes.iter().filter(|n| n.is_contender()).map(|n| n.id()).collect();
    for node in &ex.nodes {
        for &(origin, _) in node.routes().keys() {
            assert!(contender_ids.contains(&origin));
        }
        if !node.is_contender() {
            assert_eq!(node.decision(), Decision::NonLeader);
        }
    }
}

#[test]
fn stopped_contenders_never_restart() {
    let g = generate_hypercube(8, 1).unwrap();
    let cfg = ProtocolConfig::for_n(256);
    let r = run_leader_election(&g, &cfg, &sim(&cfg, 2, 9)).unwrap();
    for c in &r.contender_details {
        let first_stop = c.phases.iter().position(|p| p.stopped);
        if let Some(i) = first_stop {
            assert_eq!(i + 1, c.phases.len());
        }
    }
}

#[test]
fn no_contenders_means_no_leader() {
    let g = generate_clique(32, 0).unwrap();
    let cfg = ProtocolConfig { c1: 1e-9, ..ProtocolConfig::for_n(32) };
    let r = run_leader_election(&g, &cfg, &sim(&cfg, 1, 4)).unwrap();
    assert_eq!(r.contenders, 0);
    assert_eq!(r.outcome, Outcome::NoLeader);
    assert_eq!(r.total_units, 0);
}

#[test]
fn two_node_path_never_meets_the_intersection_threshold() {
    // At n = 2 both nodes contend, but the threshold asks for 2 other
    // contenders; every seed ends inconclusive.
    let g = generate_clique(2, 0).unwrap();
    let cfg = ProtocolConfig::for_n(2);
    assert_eq!(cfg.intersection_threshold(), 2);
    let mut exactly_one = 0;
    for seed in 0..64 {
        let r = run_leader_election(&g, &cfg, &sim(&cfg, seed, 5)).unwrap();
        assert_eq!(r.contenders, 2);
        assert_eq!(r.metrics.termination, Termination::BudgetExceeded);
        exactly_one += usize::from(r.unique_leader());
    }
    assert_eq!(exactly_one, 0);
}

#[test]
fn mutually_visible_stopped_contenders_see_each_other() {
    // Every node contends on a small clique; long walks give every pair a
    // shared proxy, so I4 of each stopped contender holds all the others.
    let g = generate_clique(12, 0).unwrap();
    let cfg = ProtocolConfig { c1: 20.0, ..ProtocolConfig::for_n(12) };
    let (r, ex) = run_election(&g, &cfg, &sim(&cfg, 3, 4)).unwrap();
    let all: BTreeSet<u64> = ex.nodes.iter().map(|n| n.id()).collect();
    for node in &ex.nodes {
        let c = node.contender().unwrap();
        assert_eq!(c.i2().len(), 11);
        let mut seen = c.i4().clone();
        seen.insert(node.id());
        assert_eq!(seen, all);
    }
    assert!(r.leaders.len() <= 1);
}

#[test]
fn winners_are_announced_to_everyone_on_small_expanders() {
    let g = generate_hypercube(8, 9).unwrap();
    let cfg = ProtocolConfig::for_n(256);
    for seed in 0..5 {
        let r = run_leader_election(&g, &cfg, &sim(&cfg, seed, 9)).unwrap();
        if r.unique_leader() {
            assert!(r.notified > 0);
            assert!(r.all_decided);
        }
    }
}

#[test]
#[ignore = "expected to fail: at n = 64 the walk count is close to n, so distinct proxies fall short (see README)"]
fn clique_64_contenders_stop_once_walks_mix() {
    let g = generate_clique(64, 0).unwrap();
    let cfg = ProtocolConfig::for_n(64);
    let mut stopped_runs = 0;
    for seed in 0..100 {
        let r = run_leader_election(&g, &cfg, &sim(&cfg, seed, 6)).unwrap();
        stopped_runs += usize::from(r.contenders > 0 && r.all_decided);
    }
    assert!(stopped_runs >= 90, "{stopped_runs} of 100 runs stopped");
}

#[test]
#[ignore = "expected to fail: at n = 64 Round2 id sets from ~16 never-stopping contenders overrun the phase-1 window (see README)"]
fn windows_absorb_queueing_on_hypercube_64() {
    let g = generate_hypercube(6, 0).unwrap();
    let cfg = ProtocolConfig::for_n(64);
    for seed in 1000..1020 {
        let r = run_leader_election(&g, &cfg, &sim(&cfg, seed, 10)).unwrap();
        assert_eq!(r.schedule_violations, 0, "seed {seed}");
    }
}
