use super::*;
use crate::graph::{generate_clique, generate_hypercube, Graph, Label};

#[derive(Clone, Debug, PartialEq)]
struct Blob(u64);

impl Payload for Blob {
    fn bits(&self) -> u64 {
        self.0
    }
    fn tag(&self) -> &'static str {
        "blob"
    }
}

struct Null;

impl NodeProgram for Null {
    type Msg = Blob;
    fn on_round(&mut self, _: &mut Ctx<'_, Blob>) {}
}

/// Node 0 sends one message of `bits` on port 1 in round 0.
struct Ping {
    first: bool,
    bits: u64,
    got: Vec<u64>,
}

impl NodeProgram for Ping {
    type Msg = Blob;
    fn on_round(&mut self, ctx: &mut Ctx<'_, Blob>) {
        for _ in ctx.inbox() {
            self.got.push(ctx.round());
        }
        if self.first && ctx.round() == 0 {
            ctx.send(1, Blob(self.bits));
        }
    }
}

fn k2() -> Graph {
    generate_clique(2, 0).unwrap()
}

fn ping(bits: u64) -> impl FnMut(NodeSetup<'_>) -> Ping {
    move |s| Ping { first: s.index == 0, bits, got: Vec::new() }
}

/// Every node gossips a random-sized blob on a random port for a few rounds.
struct Chatter {
    rounds: u64,
}

impl NodeProgram for Chatter {
    type Msg = Blob;
    fn on_round(&mut self, ctx: &mut Ctx<'_, Blob>) {
        use rand::Rng;
        if ctx.round() < self.rounds {
            let degree = ctx.degree();
            let port = ctx.rng().gen_range(1..=degree);
            let bits = ctx.rng().gen_range(1..40);
            ctx.send(port, Blob(bits));
            ctx.wake_at(ctx.round() + 1);
        }
    }
}

#[test]
fn null_protocol_is_silent() {
    let g = generate_clique(4, 1).unwrap();
    let ex = run(&g, &SimConfig::default(), |_| Null).unwrap();
    assert_eq!(ex.metrics.total_units, 0);
    assert_eq!(ex.metrics.rounds_elapsed, 0);
    assert_eq!(ex.metrics.termination, Termination::Quiescent);
}

#[test]
fn ping_arrives_next_round() {
    let ex = run(&k2(), &SimConfig::default(), ping(1)).unwrap();
    assert_eq!(ex.metrics.total_units, 1);
    assert_eq!(ex.metrics.rounds_elapsed, 1);
    assert_eq!(ex.nodes[1].got, vec![1]);
}

#[test]
fn multi_unit_messages_occupy_the_port() {
    // n = 2 gives 1-bit units, so 3 bits take rounds 0..3.
    let ex = run(&k2(), &SimConfig::default(), ping(3)).unwrap();
    assert_eq!(ex.metrics.total_units, 3);
    assert_eq!(ex.metrics.per_round_units, vec![1, 1, 1]);
    assert_eq!(ex.nodes[1].got, vec![3]);
}

#[test]
fn relaxed_mode_packs_more_bits() {
    let cfg = SimConfig { mode: Mode::Relaxed, unit_n: Some(1024), ..SimConfig::default() };
    let ex = run(&k2(), &cfg, ping(25)).unwrap();
    assert_eq!(ex.metrics.total_units, 1);
    assert_eq!(ex.metrics.unit_bits, 1000);
}

#[test]
fn reject_policy_flags_oversized_messages() {
    let cfg = SimConfig { queue_policy: QueuePolicy::Reject, ..SimConfig::default() };
    let err = run(&k2(), &cfg, ping(2)).err().unwrap();
    assert!(matches!(err, Error::ProtocolViolation { node: 0, round: 0, .. }));
}

#[test]
fn reject_policy_flags_two_messages_on_one_port() {
    struct Twice;
    impl NodeProgram for Twice {
        type Msg = Blob;
        fn on_round(&mut self, ctx: &mut Ctx<'_, Blob>) {
            if ctx.round() == 0 {
                ctx.send(1, Blob(1));
                ctx.send(1, Blob(1));
            }
        }
    }
    let cfg = SimConfig { queue_policy: QueuePolicy::Reject, ..SimConfig::default() };
    assert!(run(&k2(), &cfg, |_| Twice).is_err());
    assert!(run(&k2(), &SimConfig::default(), |_| Twice).is_ok());
}

#[test]
fn sending_on_a_missing_port_is_a_violation() {
    struct Bad;
    impl NodeProgram for Bad {
        type Msg = Blob;
        fn on_round(&mut self, ctx: &mut Ctx<'_, Blob>) {
            ctx.send(2, Blob(1));
        }
    }
    assert!(matches!(run(&k2(), &SimConfig::default(), |_| Bad), Err(Error::ProtocolViolation { .. })));
}

#[test]
fn budget_exhaustion_is_an_outcome() {
    let g = generate_hypercube(3, 0).unwrap();
    let cfg = SimConfig { round_budget: 5, ..SimConfig::default() };
    let ex = run(&g, &cfg, |_| Chatter { rounds: 100 }).unwrap();
    assert_eq!(ex.metrics.termination, Termination::BudgetExceeded);
    assert!(ex.metrics.rounds_elapsed < 5);
}

#[test]
fn stop_predicate_halts() {
    let g = generate_hypercube(3, 0).unwrap();
    let ex = run_until(&g, &SimConfig::default(), |_| Chatter { rounds: 100 }, |r, _| r == 7).unwrap();
    assert_eq!(ex.metrics.termination, Termination::Stopped);
    assert_eq!(ex.metrics.rounds_elapsed, 7);
}

#[test]
fn trace_replays_accounting_and_delivery() {
    let g = generate_hypercube(4, 2).unwrap();
    let cfg = SimConfig { record_trace: true, seed: 9, ..SimConfig::default() };
    let ex = run(&g, &cfg, |_| Chatter { rounds: 20 }).unwrap();
    let trace = ex.trace.unwrap();
    assert_eq!(trace.total_units(), ex.metrics.total_units);
    assert_eq!(ex.metrics.per_round_units.iter().sum::<u64>(), ex.metrics.total_units);
    let finished = trace.envelopes.iter().filter(|e| e.last_unit).count() as u64;
    assert_eq!(finished, ex.metrics.messages_delivered);
    assert_eq!(ex.metrics.messages_sent, ex.metrics.messages_delivered + ex.metrics.messages_merged);
    // One unit per (node, port, round).
    let mut seen = std::collections::BTreeSet::new();
    for e in &trace.envelopes {
        assert!(seen.insert((e.from_node, e.from_port, e.round)));
        assert_eq!(g.peer(e.from_node, e.from_port), crate::graph::PortRef { node: e.to_node, port: e.to_port });
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let g = generate_hypercube(4, 2).unwrap();
    let cfg = SimConfig { record_trace: true, seed: 5, ..SimConfig::default() };
    let a = run(&g, &cfg, |_| Chatter { rounds: 20 }).unwrap();
    let b = run(&g, &cfg, |_| Chatter { rounds: 20 }).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.trace.unwrap().to_jsonl(), b.trace.unwrap().to_jsonl());
    let c = run(&g, &SimConfig { seed: 6, ..cfg }, |_| Chatter { rounds: 20 }).unwrap();
    assert_ne!(a.metrics.per_round_units, c.metrics.per_round_units);
}

#[test]
fn inter_clique_edges_are_recorded() {
    let g = k2().with_labels(vec![Label::Clique(0), Label::Clique(1)]).unwrap();
    let cfg = SimConfig { record_trace: true, ..SimConfig::default() };
    let ex = run(&g, &cfg, ping(1)).unwrap();
    assert_eq!(ex.metrics.inter_clique_edges_used.len(), 1);
    let cg = clique_communication_graph(&ex.trace.unwrap(), &g).unwrap();
    assert_eq!(cg.into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
}

#[test]
fn communication_graph_needs_labels() {
    let ex = run(&k2(), &SimConfig { record_trace: true, ..SimConfig::default() }, ping(1)).unwrap();
    assert!(matches!(clique_communication_graph(&ex.trace.unwrap(), &k2()), Err(Error::MissingLabel)));
}

#[test]
fn communication_graph_is_simple() {
    let g = k2().with_labels(vec![Label::Clique(3), Label::Clique(1)]).unwrap();
    let env = Envelope {
        round: 0,
        from_node: 0,
        from_port: 1,
        to_node: 1,
        to_port: 1,
        tag: "x",
        size_units: 1,
        msg_id: 0,
        last_unit: true,
    };
    let trace = Trace { envelopes: vec![env; 5] };
    assert_eq!(clique_communication_graph(&trace, &g).unwrap().len(), 1);
    assert!(clique_communication_graph(&Trace::default(), &g).unwrap().is_empty());
    let intra = k2().with_labels(vec![Label::Clique(2), Label::Clique(2)]).unwrap();
    assert!(clique_communication_graph(&trace, &intra).unwrap().is_empty());
}

#[test]
fn jsonl_has_one_record_per_envelope() {
    let ex = run(&k2(), &SimConfig { record_trace: true, ..SimConfig::default() }, ping(2)).unwrap();
    let text = ex.trace.unwrap().to_jsonl();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["tag"], "blob");
    assert_eq!(v["from"], serde_json::json!([0, 1]));
}
