//! Push-pull rumor spreading of the leader id.
//!
//! Time is cut into slots as long as one id takes to cross an edge. In each
//! slot every node picks a uniform random port: informed nodes push the id,
//! uninformed nodes send a one-bit pull request. A request that finds an
//! informed neighbor is answered in the following slot.

use crate::error::Result;
use crate::graph::Graph;
use crate::leader::{run_election, Decision, ElectionReport, Id, LeaderNode, ProtocolConfig};
use crate::rng::derive_seed;
use crate::sim::{account_payload, log2_ceil, run_until, Ctx, NodeProgram, Payload, RunMetrics, SimConfig};
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RumorMsg {
    Rumor { id: Id, id_bits: u64 },
    Pull,
}

impl Payload for RumorMsg {
    fn bits(&self) -> u64 {
        match self {
            RumorMsg::Rumor { id_bits, .. } => *id_bits,
            RumorMsg::Pull => 1,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            RumorMsg::Rumor { .. } => "rumor",
            RumorMsg::Pull => "pull",
        }
    }

    fn merge_from(&mut self, other: &Self) -> bool {
        self == other
    }
}

#[derive(Clone, Debug, Default)]
pub struct RumorState {
    pub informed: bool,
    pub leader_id: Option<Id>,
    /// Engine round in which the rumor was first seen.
    pub informed_round: Option<u64>,
    slot: u64,
    id_bits: u64,
    pulls: Vec<usize>,
}

impl RumorState {
    fn learn(&mut self, id: Id, round: u64) {
        if !self.informed {
            self.informed = true;
            self.leader_id = Some(id);
            self.informed_round = Some(round);
        }
    }
}

impl NodeProgram for RumorState {
    type Msg = RumorMsg;

    fn on_round(&mut self, ctx: &mut Ctx<'_, RumorMsg>) {
        let round = ctx.round();
        for m in ctx.inbox() {
            match m.msg {
                RumorMsg::Rumor { id, .. } => self.learn(id, round),
                RumorMsg::Pull => self.pulls.push(m.port),
            }
        }
        if !round.is_multiple_of(self.slot) {
            ctx.wake_at(round.next_multiple_of(self.slot));
            return;
        }
        let degree = ctx.degree();
        let port = ctx.rng().gen_range(1..=degree);
        match self.leader_id {
            Some(id) => {
                let rumor = RumorMsg::Rumor { id, id_bits: self.id_bits };
                ctx.send(port, rumor.clone());
                for p in self.pulls.drain(..) {
                    ctx.send(p, rumor.clone());
                }
            }
            None => {
                self.pulls.clear();
                ctx.send(port, RumorMsg::Pull);
            }
        }
        ctx.wake_at(round + self.slot);
    }

    fn is_done(&self) -> bool {
        self.informed
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BroadcastReport {
    pub informed: usize,
    pub all_informed: bool,
    /// Engine rounds per push-pull slot.
    pub slot_rounds: u64,
    /// Slot in which the last node became informed.
    pub broadcast_rounds: u64,
    pub rounds: u64,
    pub total_units: u64,
    pub consistent: bool,
    pub metrics: RunMetrics,
}

/// Spreads `leader_id` from `source`. `n_known` fixes the id width.
pub fn push_pull_broadcast(g: &Graph, source: usize, leader_id: Id, n_known: usize, sim: &SimConfig) -> Result<(BroadcastReport, Vec<RumorState>)> {
    if source >= g.n() {
        return Err(crate::Error::Precondition(format!("source {source} outside graph of {} nodes", g.n())));
    }
    let mut sim = sim.clone();
    sim.unit_n.get_or_insert(n_known);
    let id_bits = 4 * log2_ceil(n_known);
    let slot = account_payload(id_bits, sim.mode, sim.unit_n.unwrap());
    let ex = run_until(
        g,
        &sim,
        |setup| {
            let mut s = RumorState { slot, id_bits, ..RumorState::default() };
            if setup.index == source {
                s.learn(leader_id, 0);
            }
            s
        },
        |_, nodes| nodes.iter().all(|s| s.informed),
    )?;
    let informed = ex.nodes.iter().filter(|s| s.informed).count();
    let last = ex.nodes.iter().filter_map(|s| s.informed_round).max().unwrap_or(0);
    let report = BroadcastReport {
        informed,
        all_informed: informed == g.n(),
        slot_rounds: slot,
        broadcast_rounds: last.div_ceil(slot),
        rounds: ex.metrics.rounds_elapsed,
        total_units: ex.metrics.total_units,
        consistent: ex.nodes.iter().all(|s| s.leader_id.is_none_or(|id| id == leader_id)),
        metrics: ex.metrics,
    };
    Ok((report, ex.nodes))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplicitReport {
    pub election: ElectionReport,
    /// Present only when the election produced exactly one leader.
    pub broadcast: Option<BroadcastReport>,
    /// Every node ends decided and holding the leader's id.
    pub all_know_leader: bool,
    pub total_units: u64,
    pub rounds: u64,
}

/// Implicit election followed by push-pull broadcast from the leader.
pub fn explicit_election(g: &Graph, cfg: &ProtocolConfig, sim: &SimConfig) -> Result<ExplicitReport> {
    let (election, exec) = run_election(g, cfg, sim)?;
    broadcast_after(g, cfg, sim, election, &exec.nodes)
}

/// Second half of [`explicit_election`] for callers that ran the election
/// themselves. The broadcast uses a seed derived from `sim.seed`.
pub fn broadcast_after(g: &Graph, cfg: &ProtocolConfig, sim: &SimConfig, election: ElectionReport, nodes: &[LeaderNode]) -> Result<ExplicitReport> {
    let Some(leader) = election.leader() else {
        return Ok(ExplicitReport {
            total_units: election.total_units,
            rounds: election.rounds,
            election,
            broadcast: None,
            all_know_leader: false,
        });
    };
    let leader_id = nodes[leader].id();
    let bsim = SimConfig { seed: derive_seed(sim.seed, 0xb0ad), record_trace: false, ..sim.clone() };
    let (broadcast, states) = push_pull_broadcast(g, leader, leader_id, cfg.n, &bsim)?;
    let all_know_leader = nodes.iter().zip(&states).enumerate().all(|(u, (node, s))| {
        let decided = u == leader || node.decision() != Decision::Leader;
        decided && s.leader_id == Some(leader_id)
    });
    Ok(ExplicitReport {
        total_units: election.total_units + broadcast.total_units,
        rounds: election.rounds + broadcast.rounds,
        election,
        broadcast: Some(broadcast),
        all_know_leader,
    })
}
