//! Deterministic synchronous round engine.
//!
//! In round `r` every node with mail or a pending wake-up runs its step; the
//! messages it sends are queued FIFO per outgoing port. Each port then
//! transmits one unit per round, so a `k`-unit message occupies its port for
//! `k` rounds and is handed to the receiver at the start of the round after
//! its last unit crossed. Rounds in which nothing is queued, in flight or
//! scheduled are skipped.

mod accounting;
mod trace;

pub use accounting::{account_payload, log2_ceil, unit_bits, Mode};
pub use trace::{clique_communication_graph, Envelope, Trace};

use crate::error::{Error, Result};
use crate::graph::{Graph, Label};
use crate::rng::{stream, SimRng};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Debug;

/// A protocol message.
pub trait Payload: Clone + Debug {
    /// Encoded size in bits; at least 1.
    fn bits(&self) -> u64;

    fn tag(&self) -> &'static str;

    /// Absorbs `other` into `self` if both can travel as one message.
    /// Only messages still waiting in a port queue are offered for merging.
    fn merge_from(&mut self, _other: &Self) -> bool {
        false
    }
}

/// Per-node state machine driven by the engine.
pub trait NodeProgram {
    type Msg: Payload;

    fn on_round(&mut self, ctx: &mut Ctx<'_, Self::Msg>);

    /// Whether the node has nothing further to initiate.
    fn is_done(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct Incoming<M> {
    pub port: usize,
    pub msg: M,
}

/// What a node sees during one step.
pub struct Ctx<'a, M> {
    round: u64,
    degree: usize,
    inbox: &'a [Incoming<M>],
    rng: &'a mut SimRng,
    outbox: &'a mut Vec<(usize, M)>,
    wakeups: &'a mut Vec<u64>,
    violation: &'a mut Option<String>,
}

impl<M> Ctx<'_, M> {
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn inbox(&self) -> &[Incoming<M>] {
        self.inbox
    }

    pub fn rng(&mut self) -> &mut SimRng {
        self.rng
    }

    /// Queues `msg` on `port` (1-based).
    pub fn send(&mut self, port: usize, msg: M) {
        if port == 0 || port > self.degree {
            self.violate(format!("send on nonexistent port {port}"));
            return;
        }
        self.outbox.push((port, msg));
    }

    /// Requests a step at `round` even if no mail arrives. Past rounds are
    /// ignored.
    pub fn wake_at(&mut self, round: u64) {
        if round > self.round {
            self.wakeups.push(round);
        }
    }

    /// Aborts the run with a protocol-violation error.
    pub fn violate(&mut self, reason: impl Into<String>) {
        self.violation.get_or_insert_with(|| reason.into());
    }
}

/// Information available when the engine instantiates a node.
pub struct NodeSetup<'a> {
    /// Engine-side index. Node programs must not use it for protocol
    /// decisions; it is exposed so harnesses can assign id spaces.
    pub index: usize,
    pub degree: usize,
    pub label: Label,
    pub rng: &'a mut SimRng,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueuePolicy {
    /// Oversized or excess messages wait in a per-port FIFO.
    #[default]
    Fifo,
    /// More than one unit per port per round is a protocol violation.
    Reject,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub mode: Mode,
    /// Rounds `0..round_budget` may execute.
    pub round_budget: u64,
    pub record_trace: bool,
    /// Network size used for the unit width; defaults to the graph's size.
    pub unit_n: Option<usize>,
    /// Added to the node index when selecting its random stream.
    pub stream_offset: u64,
    pub queue_policy: QueuePolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: Mode::Congest,
            round_budget: 1_000_000,
            record_trace: false,
            unit_n: None,
            stream_offset: 0,
            queue_policy: QueuePolicy::Fifo,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Nothing queued, in flight or scheduled.
    Quiescent,
    /// The caller's stop condition held.
    Stopped,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_units: u64,
    pub per_round_units: Vec<u64>,
    /// Round of the last delivery (or the round the stop condition held).
    pub rounds_elapsed: u64,
    pub termination: Termination,
    pub unit_bits: u64,
    pub messages_sent: u64,
    pub messages_merged: u64,
    pub messages_delivered: u64,
    pub all_done: bool,
    /// Graph edges `(u, v)`, `u < v`, that carried traffic between
    /// different cliques.
    pub inter_clique_edges_used: BTreeSet<(usize, usize)>,
}

pub struct Execution<P> {
    pub metrics: RunMetrics,
    pub nodes: Vec<P>,
    pub trace: Option<Trace>,
}

struct Queued<M> {
    msg: M,
    units: u64,
    sent: u64,
    id: u64,
}

pub fn run<P, F>(g: &Graph, cfg: &SimConfig, factory: F) -> Result<Execution<P>>
where
    P: NodeProgram,
    F: FnMut(NodeSetup<'_>) -> P,
{
    run_until(g, cfg, factory, |_, _| false)
}

/// Like [`run`], additionally halting after any round in which `stop`
/// returns true.
pub fn run_until<P, F, S>(g: &Graph, cfg: &SimConfig, mut factory: F, mut stop: S) -> Result<Execution<P>>
where
    P: NodeProgram,
    F: FnMut(NodeSetup<'_>) -> P,
    S: FnMut(u64, &[P]) -> bool,
{
    if cfg.round_budget == 0 {
        return Err(Error::Precondition("round budget must be at least 1".into()));
    }
    let n = g.n();
    let unit = unit_bits(cfg.unit_n.unwrap_or(n), cfg.mode);
    let mut rngs: Vec<SimRng> = (0..n)
        .map(|u| stream(cfg.seed, cfg.stream_offset + u as u64))
        .collect();
    let mut nodes: Vec<P> = rngs
        .iter_mut()
        .enumerate()
        .map(|(u, rng)| factory(NodeSetup { index: u, degree: g.degree(u), label: g.label(u), rng }))
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for u in 0..n {
        offsets.push(offsets[u] + g.degree(u));
    }
    let mut queues: Vec<VecDeque<Queued<P::Msg>>> = (0..offsets[n]).map(|_| VecDeque::new()).collect();
    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; offsets[n]];
    let queue_owner: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (1..=g.degree(u)).map(move |p| (u, p)))
        .collect();

    let mut inboxes: Vec<Vec<Incoming<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
    let mut arriving: Vec<(usize, usize, P::Msg)> = Vec::new();
    let mut wakeups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    wakeups.insert(0, (0..n).collect());

    let mut metrics = RunMetrics {
        total_units: 0,
        per_round_units: Vec::new(),
        rounds_elapsed: 0,
        termination: Termination::Quiescent,
        unit_bits: unit,
        messages_sent: 0,
        messages_merged: 0,
        messages_delivered: 0,
        all_done: false,
        inter_clique_edges_used: BTreeSet::new(),
    };
    let mut trace = cfg.record_trace.then(Trace::default);

    let mut scheduled = vec![false; n];
    let mut to_step: Vec<usize> = Vec::new();
    let mut outbox: Vec<(usize, P::Msg)> = Vec::new();
    let mut node_wakeups: Vec<u64> = Vec::new();
    let mut next_id = 0u64;
    let mut round = 0u64;

    loop {
        for (u, port, msg) in arriving.drain(..) {
            inboxes[u].push(Incoming { port, msg });
            metrics.messages_delivered += 1;
            metrics.rounds_elapsed = round;
            if !scheduled[u] {
                scheduled[u] = true;
                to_step.push(u);
            }
        }
        if let Some(list) = wakeups.remove(&round) {
            for u in list {
                if !scheduled[u] {
                    scheduled[u] = true;
                    to_step.push(u);
                }
            }
        }
        to_step.sort_unstable();

        for &u in &to_step {
            scheduled[u] = false;
            let inbox = &mut inboxes[u];
            inbox.sort_by_key(|m| m.port);
            let mut violation = None;
            {
                let mut ctx = Ctx {
                    round,
                    degree: g.degree(u),
                    inbox,
                    rng: &mut rngs[u],
                    outbox: &mut outbox,
                    wakeups: &mut node_wakeups,
                    violation: &mut violation,
                };
                nodes[u].on_round(&mut ctx);
            }
            inbox.clear();
            if let Some(reason) = violation {
                return Err(Error::ProtocolViolation { node: u, round, reason });
            }
            for w in node_wakeups.drain(..) {
                let list = wakeups.entry(w).or_default();
                if list.last() != Some(&u) {
                    list.push(u);
                }
            }
            for (port, msg) in outbox.drain(..) {
                let q = offsets[u] + port - 1;
                let units = msg.bits().max(1).div_ceil(unit);
                let queue = &mut queues[q];
                if cfg.queue_policy == QueuePolicy::Reject && cfg.mode == Mode::Congest {
                    if units > 1 {
                        return Err(Error::ProtocolViolation {
                            node: u,
                            round,
                            reason: format!("{}-unit message on port {port}", units),
                        });
                    }
                    if !queue.is_empty() {
                        return Err(Error::ProtocolViolation {
                            node: u,
                            round,
                            reason: format!("more than one envelope on port {port} in one round"),
                        });
                    }
                }
                metrics.messages_sent += 1;
                let merged = queue.iter_mut().rev().take_while(|e| e.sent == 0).any(|e| {
                    if e.msg.merge_from(&msg) {
                        e.units = e.msg.bits().max(1).div_ceil(unit);
                        true
                    } else {
                        false
                    }
                });
                if merged {
                    metrics.messages_merged += 1;
                    continue;
                }
                queue.push_back(Queued { msg, units, sent: 0, id: next_id });
                next_id += 1;
                if !is_active[q] {
                    is_active[q] = true;
                    active.push(q);
                }
            }
        }
        to_step.clear();

        let mut units_this_round = 0;
        active.retain(|&q| {
            let (u, port) = queue_owner[q];
            let peer = g.peer(u, port);
            let queue = &mut queues[q];
            let head = queue.front_mut().expect("active queues are nonempty");
            head.sent += 1;
            units_this_round += 1;
            let last = head.sent == head.units;
            if let (Some(a), Some(b)) = (g.label(u).clique(), g.label(peer.node).clique()) {
                if a != b {
                    metrics.inter_clique_edges_used.insert((u.min(peer.node), u.max(peer.node)));
                }
            }
            if let Some(t) = trace.as_mut() {
                t.envelopes.push(Envelope {
                    round,
                    from_node: u,
                    from_port: port,
                    to_node: peer.node,
                    to_port: peer.port,
                    tag: head.msg.tag(),
                    size_units: 1,
                    msg_id: head.id,
                    last_unit: last,
                });
            }
            if last {
                let done = queue.pop_front().expect("head exists");
                arriving.push((peer.node, peer.port, done.msg));
            }
            let keep = !queue.is_empty();
            is_active[q] = keep;
            keep
        });
        if units_this_round > 0 {
            let idx = round as usize;
            if metrics.per_round_units.len() <= idx {
                metrics.per_round_units.resize(idx + 1, 0);
            }
            metrics.per_round_units[idx] += units_this_round;
            metrics.total_units += units_this_round;
        }

        if stop(round, &nodes) {
            metrics.termination = Termination::Stopped;
            metrics.rounds_elapsed = round;
            break;
        }
        let next = if !arriving.is_empty() || !active.is_empty() {
            Some(round + 1)
        } else {
            wakeups.keys().next().copied()
        };
        match next {
            None => break,
            Some(r) if r >= cfg.round_budget => {
                metrics.termination = Termination::BudgetExceeded;
                break;
            }
            Some(r) => round = r,
        }
    }
    metrics.all_done = nodes.iter().all(NodeProgram::is_done);
    Ok(Execution { metrics, nodes, trace })
}

#[cfg(test)]
mod tests;
