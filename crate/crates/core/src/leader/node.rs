//! Per-node election state machine.
//!
//! Walk bundles are aggregated per `(origin, phase, remaining)`. Every node a
//! bundle passes through keeps a route record for `(origin, phase)`: the port
//! of first arrival (its parent toward the origin), the ports bundles left
//! through, and how many walks ended there. Parent ports form a tree rooted
//! at the origin because a parent was always reached strictly earlier, so
//! replies climbing parents are counted exactly once. Forward traffic
//! (round 2, winner) floods the recorded out-ports once per record.

use super::{PhaseSchedule, PhaseWindow, ProtocolConfig};
use crate::leader::walk::walk_step;
use crate::sim::{Ctx, NodeProgram, Payload};
use rand::Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub type Id = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    Token { remaining: u64, count: u64 },
    Reply1 { distinct: u64, proxies: u64, ids: BTreeSet<Id> },
    Round2 { ids: BTreeSet<Id> },
    Reply3 { ids: BTreeSet<Id> },
    WinnerDown,
    WinnerUp,
}

/// Election message. `origin` and `phase` name the route record it travels
/// on; the phase is implied by the global schedule and is not charged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaderMsg {
    pub origin: Id,
    pub phase: u32,
    pub body: Body,
    /// Winner notification piggy-backed on the message.
    pub winner: bool,
    id_bits: u64,
    counter_bits: u64,
}

impl Payload for LeaderMsg {
    fn bits(&self) -> u64 {
        let ids = |s: &BTreeSet<Id>| s.len() as u64 * self.id_bits;
        let body = match &self.body {
            Body::Token { .. } => 2 * self.counter_bits,
            Body::Reply1 { ids: s, .. } => 2 * self.counter_bits + ids(s),
            Body::Round2 { ids: s } | Body::Reply3 { ids: s } => ids(s),
            Body::WinnerDown | Body::WinnerUp => 1,
        };
        let flag = u64::from(self.winner && !matches!(self.body, Body::WinnerDown | Body::WinnerUp));
        self.id_bits + body + flag
    }

    fn tag(&self) -> &'static str {
        match self.body {
            Body::Token { .. } => "token",
            Body::Reply1 { .. } => "reply1",
            Body::Round2 { .. } => "round2",
            Body::Reply3 { .. } => "reply3",
            Body::WinnerDown => "winner_down",
            Body::WinnerUp => "winner_up",
        }
    }

    fn merge_from(&mut self, other: &Self) -> bool {
        if self.origin != other.origin || self.phase != other.phase {
            return false;
        }
        let merged = match (&mut self.body, &other.body) {
            (Body::Token { remaining: a, count }, Body::Token { remaining: b, count: c }) if a == b => {
                *count += c;
                true
            }
            (
                Body::Reply1 { distinct, proxies, ids },
                Body::Reply1 { distinct: d2, proxies: p2, ids: i2 },
            ) => {
                *distinct += d2;
                *proxies += p2;
                ids.extend(i2);
                true
            }
            (Body::Round2 { ids }, Body::Round2 { ids: i2 }) | (Body::Reply3 { ids }, Body::Reply3 { ids: i2 }) => {
                ids.extend(i2);
                true
            }
            (Body::WinnerDown, Body::WinnerDown) | (Body::WinnerUp, Body::WinnerUp) => true,
            _ => false,
        };
        if merged {
            self.winner |= other.winner;
        }
        merged
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Undecided,
    Leader,
    NonLeader,
}

/// Route record kept by every node a walk bundle of `(origin, phase)` visited.
#[derive(Clone, Debug, Default)]
pub struct Route {
    /// Port of first arrival; `None` at the origin.
    pub parent: Option<usize>,
    pub first_round: u64,
    pub in_counts: BTreeMap<usize, u64>,
    pub out_ports: BTreeSet<usize>,
    /// Walks of this origin and phase that ended here.
    pub ended: u64,
    round2_seen: bool,
    down_seen: bool,
    up_seen: bool,
    r1_forwarded: BTreeSet<Id>,
    r3_forwarded: BTreeSet<Id>,
}

#[derive(Clone, Debug, Default)]
struct ProxyPhase {
    /// Origins whose walks ended here in this phase.
    served: BTreeSet<Id>,
    replied1: BTreeSet<Id>,
    i2: BTreeSet<Id>,
    replied3: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Collecting,
    AwaitDecision,
    Waiting,
    Finished,
}

/// Summary of one phase as seen by its contender.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseRecord {
    pub index: u32,
    pub walk_length: u64,
    pub distinct: u64,
    pub proxies: u64,
    /// `|I2|`: other contenders sharing a proxy.
    pub adjacent: usize,
    pub i4_size: usize,
    pub stopped: bool,
    pub leader: bool,
}

#[derive(Clone, Debug)]
pub struct ContenderState {
    phase: PhaseWindow,
    stage: Stage,
    distinct: u64,
    proxies: u64,
    i2: BTreeSet<Id>,
    i4: BTreeSet<Id>,
    pub history: Vec<PhaseRecord>,
}

impl ContenderState {
    pub fn stopped(&self) -> bool {
        self.stage == Stage::Finished
    }
    pub fn current_phase(&self) -> PhaseWindow {
        self.phase
    }
    pub fn i2(&self) -> &BTreeSet<Id> {
        &self.i2
    }
    pub fn i4(&self) -> &BTreeSet<Id> {
        &self.i4
    }
    pub fn distinct_count(&self) -> u64 {
        self.distinct
    }
}

/// Counters for messages that arrived after their window closed.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct NodeStats {
    pub late_walk_ends: u64,
    pub late_reply1: u64,
    pub late_round2: u64,
    pub late_reply3: u64,
    pub missing_routes: u64,
    pub first_winner_round: Option<u64>,
}

impl NodeStats {
    pub fn schedule_violations(&self) -> u64 {
        self.late_walk_ends + self.late_reply1 + self.late_round2 + self.late_reply3
    }
}

/// Values shared by every node of a run.
#[derive(Debug)]
pub struct Shared {
    pub cfg: ProtocolConfig,
    pub schedule: PhaseSchedule,
    pub walks: u64,
    pub intersection_threshold: u64,
    pub distinctness_threshold: u64,
}

impl Shared {
    pub fn new(cfg: ProtocolConfig) -> Arc<Self> {
        Arc::new(Self {
            schedule: PhaseSchedule::new(&cfg),
            walks: cfg.walks_per_phase(),
            intersection_threshold: cfg.intersection_threshold(),
            distinctness_threshold: cfg.distinctness_threshold(),
            cfg,
        })
    }
}

type BundleKey = (Id, u32, u64);

pub struct LeaderNode {
    shared: Arc<Shared>,
    id: Id,
    contender: Option<ContenderState>,
    decision: Decision,
    winner_seen: bool,
    routes: BTreeMap<(Id, u32), Route>,
    proxy_of: BTreeSet<Id>,
    proxy_phases: BTreeMap<u32, ProxyPhase>,
    held: BTreeMap<BundleKey, u64>,
    stats: NodeStats,
    out: Vec<(usize, LeaderMsg)>,
}

impl LeaderNode {
    /// Draws the id uniformly from `[1, n^4]` shifted by `id_offset`, then
    /// becomes a contender with probability `min(1, c1 log2(n) / n)`.
    pub fn init<R: Rng + ?Sized>(shared: Arc<Shared>, id_offset: u64, rng: &mut R) -> Self {
        let id = id_offset + rng.gen_range(1..=shared.cfg.id_range());
        let contender = rng.gen_bool(shared.cfg.contender_probability());
        let phase = shared.schedule.phase(0);
        Self {
            id,
            contender: contender.then(|| ContenderState {
                phase,
                stage: Stage::Collecting,
                distinct: 0,
                proxies: 0,
                i2: BTreeSet::new(),
                i4: BTreeSet::new(),
                history: Vec::new(),
            }),
            decision: if contender { Decision::Undecided } else { Decision::NonLeader },
            shared,
            winner_seen: false,
            routes: BTreeMap::new(),
            proxy_of: BTreeSet::new(),
            proxy_phases: BTreeMap::new(),
            held: BTreeMap::new(),
            stats: NodeStats::default(),
            out: Vec::new(),
        }
    }

    pub fn id(&self) -> Id {
        self.id
    }
    pub fn is_contender(&self) -> bool {
        self.contender.is_some()
    }
    pub fn contender(&self) -> Option<&ContenderState> {
        self.contender.as_ref()
    }
    pub fn decision(&self) -> Decision {
        self.decision
    }
    pub fn winner_seen(&self) -> bool {
        self.winner_seen
    }
    pub fn stats(&self) -> &NodeStats {
        &self.stats
    }
    pub fn routes(&self) -> &BTreeMap<(Id, u32), Route> {
        &self.routes
    }
    /// Contenders (any phase) this node is a proxy for.
    pub fn proxy_of(&self) -> &BTreeSet<Id> {
        &self.proxy_of
    }

    fn is_origin(&self, origin: Id) -> bool {
        self.contender.is_some() && origin == self.id
    }

    fn msg(&self, origin: Id, phase: u32, body: Body) -> LeaderMsg {
        LeaderMsg {
            origin,
            phase,
            body,
            winner: self.winner_seen,
            id_bits: self.shared.cfg.id_bits(),
            counter_bits: self.shared.cfg.counter_bits(),
        }
    }

    fn send(&mut self, port: usize, origin: Id, phase: u32, body: Body) {
        let m = self.msg(origin, phase, body);
        self.out.push((port, m));
    }

    fn phase(&self, index: u32) -> PhaseWindow {
        self.shared.schedule.phase(index)
    }

    // ---- winner propagation -------------------------------------------------

    fn note_winner(&mut self, round: u64) {
        if self.winner_seen {
            return;
        }
        self.winner_seen = true;
        self.stats.first_winner_round = Some(round);
        // As a proxy: notify every contender served, over its parent port.
        let ups: Vec<(Id, u32, usize)> = self
            .routes
            .iter_mut()
            .filter(|(_, r)| r.ended > 0 && !r.up_seen)
            .filter_map(|(&(o, p), r)| {
                r.up_seen = true;
                r.parent.map(|port| (o, p, port))
            })
            .collect();
        for (o, p, port) in ups {
            self.send(port, o, p, Body::WinnerUp);
        }
        // As a contender: notify all own proxies, every phase.
        if self.contender.is_some() {
            let me = self.id;
            let downs: Vec<(u32, Vec<usize>)> = self
                .routes
                .range((me, 0)..=(me, u32::MAX))
                .map(|(&(_, p), r)| (p, r.out_ports.iter().copied().collect()))
                .collect();
            for (p, ports) in downs {
                if let Some(r) = self.routes.get_mut(&(me, p)) {
                    r.down_seen = true;
                }
                for port in ports {
                    self.send(port, me, p, Body::WinnerDown);
                }
            }
        }
    }

    // ---- message handling ---------------------------------------------------

    fn receive(&mut self, port: usize, msg: LeaderMsg, round: u64, batch: &mut BTreeMap<BundleKey, u64>) -> Result<(), String> {
        let key = (msg.origin, msg.phase);
        match msg.body {
            Body::Token { remaining, count } => {
                if remaining == 0 {
                    return Err("walk token with no remaining steps".into());
                }
                let route = self.routes.entry(key).or_insert_with(|| Route {
                    parent: Some(port),
                    first_round: round,
                    ..Route::default()
                });
                *route.in_counts.entry(port).or_default() += count;
                *batch.entry((msg.origin, msg.phase, remaining)).or_default() += count;
            }
            Body::Reply1 { distinct, proxies, ids } => {
                if self.is_origin(msg.origin) {
                    self.accept_reply1(msg.phase, distinct, proxies, ids, round);
                } else if let Some(route) = self.routes.get_mut(&key) {
                    let fresh: BTreeSet<Id> = ids.difference(&route.r1_forwarded).copied().collect();
                    route.r1_forwarded.extend(&fresh);
                    let parent = route.parent;
                    match parent {
                        Some(p) => self.send(p, msg.origin, msg.phase, Body::Reply1 { distinct, proxies, ids: fresh }),
                        None => self.stats.missing_routes += 1,
                    }
                } else {
                    self.stats.missing_routes += 1;
                }
            }
            Body::Round2 { ids } => {
                let late = round >= self.phase(msg.phase).round3();
                let Some(route) = self.routes.get_mut(&key) else {
                    self.stats.missing_routes += 1;
                    return Ok(());
                };
                if !route.round2_seen {
                    route.round2_seen = true;
                    let ended = route.ended > 0;
                    let ports: Vec<usize> = route.out_ports.iter().copied().collect();
                    if ended {
                        if late {
                            self.stats.late_round2 += 1;
                        }
                        self.proxy_phases.entry(msg.phase).or_default().i2.extend(&ids);
                    }
                    for p in ports {
                        self.send(p, msg.origin, msg.phase, Body::Round2 { ids: ids.clone() });
                    }
                }
            }
            Body::Reply3 { ids } => {
                if self.is_origin(msg.origin) {
                    self.accept_reply3(msg.phase, ids, round);
                } else if let Some(route) = self.routes.get_mut(&key) {
                    let fresh: BTreeSet<Id> = ids.difference(&route.r3_forwarded).copied().collect();
                    route.r3_forwarded.extend(&fresh);
                    match route.parent {
                        Some(p) => self.send(p, msg.origin, msg.phase, Body::Reply3 { ids: fresh }),
                        None => self.stats.missing_routes += 1,
                    }
                } else {
                    self.stats.missing_routes += 1;
                }
            }
            Body::WinnerDown => {
                if let Some(route) = self.routes.get_mut(&key) {
                    if !route.down_seen {
                        route.down_seen = true;
                        let ports: Vec<usize> = route.out_ports.iter().copied().collect();
                        for p in ports {
                            self.send(p, msg.origin, msg.phase, Body::WinnerDown);
                        }
                    }
                } else {
                    self.stats.missing_routes += 1;
                }
                self.note_winner(round);
            }
            Body::WinnerUp => {
                if !self.is_origin(msg.origin) {
                    if let Some(route) = self.routes.get_mut(&key) {
                        if !route.up_seen {
                            route.up_seen = true;
                            if let Some(p) = route.parent {
                                self.send(p, msg.origin, msg.phase, Body::WinnerUp);
                            }
                        }
                    } else {
                        self.stats.missing_routes += 1;
                    }
                }
                self.note_winner(round);
            }
        }
        if msg.winner {
            self.note_winner(round);
        }
        Ok(())
    }

    fn accept_reply1(&mut self, phase: u32, distinct: u64, proxies: u64, ids: BTreeSet<Id>, round: u64) {
        let me = self.id;
        let Some(c) = self.contender.as_mut() else { return };
        if phase != c.phase.index || c.stage != Stage::Collecting {
            self.stats.late_reply1 += 1;
            return;
        }
        if round >= c.phase.round2() {
            self.stats.late_reply1 += 1;
        }
        c.distinct += distinct;
        c.proxies += proxies;
        c.i2.extend(ids.into_iter().filter(|&i| i != me));
    }

    fn accept_reply3(&mut self, phase: u32, ids: BTreeSet<Id>, round: u64) {
        let Some(c) = self.contender.as_mut() else { return };
        if phase != c.phase.index || c.stage != Stage::AwaitDecision || round > c.phase.decision() {
            self.stats.late_reply3 += 1;
            return;
        }
        c.i4.extend(ids);
    }

    // ---- walks ----------------------------------------------------------------

    fn advance_walks<R: Rng + ?Sized>(&mut self, batch: BTreeMap<BundleKey, u64>, round: u64, degree: usize, rng: &mut R) {
        for ((origin, phase, remaining), count) in batch {
            let left = remaining - 1;
            if left == 0 {
                self.end_walks(origin, phase, count, round);
            } else {
                self.split(origin, phase, left, count, degree, rng);
            }
        }
    }

    fn split<R: Rng + ?Sized>(&mut self, origin: Id, phase: u32, remaining: u64, count: u64, degree: usize, rng: &mut R) {
        let s = walk_step(count, degree, rng);
        if s.stay > 0 {
            *self.held.entry((origin, phase, remaining)).or_default() += s.stay;
        }
        if let Some(route) = self.routes.get_mut(&(origin, phase)) {
            route.out_ports.extend(s.moves.iter().map(|&(p, _)| p));
        }
        for (port, c) in s.moves {
            self.send(port, origin, phase, Body::Token { remaining, count: c });
        }
    }

    fn end_walks(&mut self, origin: Id, phase: u32, count: u64, round: u64) {
        let route = self.routes.get_mut(&(origin, phase)).expect("route exists for arriving walks");
        route.ended += count;
        self.proxy_of.insert(origin);
        let window = self.phase(phase);
        let entry = self.proxy_phases.entry(phase).or_default();
        entry.served.insert(origin);
        if round >= window.walk_end() {
            self.stats.late_walk_ends += 1;
        }
    }

    // ---- timed actions ------------------------------------------------------

    fn proxy_actions(&mut self, round: u64) {
        let phases: Vec<u32> = self.proxy_phases.keys().copied().collect();
        for p in phases {
            let window = self.phase(p);
            if round >= window.walk_end() {
                let pending: Vec<Id> = {
                    let pp = &self.proxy_phases[&p];
                    pp.served.difference(&pp.replied1).copied().collect()
                };
                for origin in pending {
                    self.proxy_phases.get_mut(&p).unwrap().replied1.insert(origin);
                    let ended = self.routes[&(origin, p)].ended;
                    let ids: BTreeSet<Id> = self.proxy_of.iter().copied().filter(|&o| o != origin).collect();
                    let body = Body::Reply1 { distinct: u64::from(ended == 1), proxies: 1, ids };
                    self.reply_toward(origin, p, body, round);
                }
            }
            if round >= window.round3() && !self.proxy_phases[&p].replied3 {
                let pp = self.proxy_phases.get_mut(&p).unwrap();
                pp.replied3 = true;
                let targets: Vec<Id> = pp.served.iter().copied().collect();
                let ids = pp.i2.clone();
                for origin in targets {
                    self.reply_toward(origin, p, Body::Reply3 { ids: ids.clone() }, round);
                }
            }
        }
        self.proxy_phases.retain(|_, pp| !(pp.replied3 && pp.replied1.len() == pp.served.len()));
    }

    /// Sends a proxy reply up the parent tree, or hands it to the local
    /// contender when this node is the origin.
    fn reply_toward(&mut self, origin: Id, phase: u32, body: Body, round: u64) {
        if self.is_origin(origin) {
            match body {
                Body::Reply1 { distinct, proxies, ids } => self.accept_reply1(phase, distinct, proxies, ids, round),
                Body::Reply3 { ids } => self.accept_reply3(phase, ids, round),
                _ => unreachable!("only replies climb the tree"),
            }
            return;
        }
        match self.routes[&(origin, phase)].parent {
            Some(port) => {
                if let Some(r) = self.routes.get_mut(&(origin, phase)) {
                    match &body {
                        Body::Reply1 { ids, .. } => r.r1_forwarded.extend(ids),
                        Body::Reply3 { ids } => r.r3_forwarded.extend(ids),
                        _ => {}
                    }
                }
                self.send(port, origin, phase, body)
            }
            None => self.stats.missing_routes += 1,
        }
    }

    fn start_phase<R: Rng + ?Sized>(&mut self, round: u64, degree: usize, rng: &mut R, ctx_wake: &mut Vec<u64>) {
        let me = self.id;
        let window = self.contender.as_ref().expect("contender").phase;
        self.routes.insert((me, window.index), Route { parent: None, first_round: round, ..Route::default() });
        let c = self.contender.as_mut().unwrap();
        c.stage = Stage::Collecting;
        c.distinct = 0;
        c.proxies = 0;
        c.i2.clear();
        c.i4.clear();
        let walks = self.shared.walks;
        self.split(me, window.index, window.walk_length, walks, degree, rng);
        ctx_wake.extend([window.round2(), window.decision()]);
    }

    fn contender_actions<R: Rng + ?Sized>(&mut self, round: u64, degree: usize, rng: &mut R, wake: &mut Vec<u64>) {
        let Some(c) = self.contender.as_ref() else { return };
        let window = c.phase;
        match c.stage {
            Stage::Collecting if round == window.start && !self.routes.contains_key(&(self.id, window.index)) => {
                self.start_phase(round, degree, rng, wake);
            }
            Stage::Collecting if round >= window.round2() => {
                let me = self.id;
                let i2 = c.i2.clone();
                self.contender.as_mut().unwrap().stage = Stage::AwaitDecision;
                let (ports, ended) = {
                    let r = &self.routes[&(me, window.index)];
                    (r.out_ports.iter().copied().collect::<Vec<_>>(), r.ended)
                };
                if let Some(r) = self.routes.get_mut(&(me, window.index)) {
                    r.round2_seen = true;
                }
                if ended > 0 {
                    self.proxy_phases.entry(window.index).or_default().i2.extend(&i2);
                }
                for p in ports {
                    self.send(p, me, window.index, Body::Round2 { ids: i2.clone() });
                }
            }
            Stage::AwaitDecision if round >= window.decision() => self.decide(round, wake),
            Stage::Waiting if round >= window.end() => {
                let next = self.phase(window.index + 1);
                self.contender.as_mut().unwrap().phase = next;
                self.contender.as_mut().unwrap().stage = Stage::Collecting;
                self.start_phase(round, degree, rng, wake);
            }
            _ => {}
        }
    }

    fn decide(&mut self, round: u64, wake: &mut Vec<u64>) {
        let me = self.id;
        let shared = Arc::clone(&self.shared);
        let winner_seen = self.winner_seen;
        let c = self.contender.as_mut().expect("contender");
        let stop = c.i2.len() as u64 >= shared.intersection_threshold && c.distinct >= shared.distinctness_threshold;
        let leader = stop && !winner_seen && c.i4.iter().all(|&i| i <= me);
        c.history.push(PhaseRecord {
            index: c.phase.index,
            walk_length: c.phase.walk_length,
            distinct: c.distinct,
            proxies: c.proxies,
            adjacent: c.i2.len(),
            i4_size: c.i4.len(),
            stopped: stop,
            leader,
        });
        if stop {
            c.stage = Stage::Finished;
            self.decision = if leader { Decision::Leader } else { Decision::NonLeader };
            if leader {
                self.note_winner(round);
            }
        } else {
            c.stage = Stage::Waiting;
            wake.push(c.phase.end());
        }
    }
}

impl NodeProgram for LeaderNode {
    type Msg = LeaderMsg;

    fn on_round(&mut self, ctx: &mut Ctx<'_, LeaderMsg>) {
        let round = ctx.round();
        let degree = ctx.degree();
        let mut batch = std::mem::take(&mut self.held);
        let inbox: Vec<_> = ctx.inbox().to_vec();
        for m in inbox {
            if let Err(reason) = self.receive(m.port, m.msg, round, &mut batch) {
                ctx.violate(reason);
                return;
            }
        }
        let mut wake = Vec::new();
        self.contender_actions(round, degree, ctx.rng(), &mut wake);
        self.advance_walks(batch, round, degree, ctx.rng());
        self.proxy_actions(round);
        // A decision reached in this round may need this round's replies;
        // run it after proxy actions too.
        self.contender_actions(round, degree, ctx.rng(), &mut wake);

        for (p, pp) in &self.proxy_phases {
            let w = self.shared.schedule.phase(*p);
            if pp.replied1.len() < pp.served.len() {
                wake.push(w.walk_end());
            }
            if !pp.replied3 {
                wake.push(w.round3());
            }
        }
        if !self.held.is_empty() {
            wake.push(round + 1);
        }
        for w in wake {
            ctx.wake_at(w);
        }
        for (port, msg) in self.out.drain(..) {
            ctx.send(port, msg);
        }
    }

    fn is_done(&self) -> bool {
        self.contender.as_ref().map_or(true, ContenderState::stopped)
    }
}
