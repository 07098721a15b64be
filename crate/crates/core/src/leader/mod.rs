//! Randomized leader election by random-walk intersection.

mod config;
mod node;
mod schedule;
mod walk;

pub use config::{IdSpace, ProtocolConfig};
pub use node::{Body, ContenderState, Decision, Id, LeaderMsg, LeaderNode, NodeStats, PhaseRecord, Route, Shared};
pub use schedule::{PhaseSchedule, PhaseWindow};
pub use walk::{walk_step, WalkSplit};

use crate::error::Result;
use crate::graph::{Graph, Half, Label};
use crate::sim::{run, Execution, RunMetrics, SimConfig, Termination};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    UniqueLeader,
    NoLeader,
    MultipleLeaders,
    /// No leader yet when the round budget ran out.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContenderSummary {
    pub node: usize,
    pub id: Id,
    pub stopped: bool,
    pub leader: bool,
    pub phases: Vec<PhaseRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ElectionReport {
    pub n: usize,
    pub outcome: Outcome,
    /// Node indices that decided `Leader`.
    pub leaders: Vec<usize>,
    pub leader_ids: Vec<Id>,
    pub contenders: usize,
    pub stopped_contenders: usize,
    /// Every contender stopped.
    pub all_decided: bool,
    /// Nodes that learned of a winner.
    pub notified: usize,
    pub id_collisions: usize,
    pub schedule_violations: u64,
    pub missing_routes: u64,
    /// Walks ended per completed (origin, phase) always summed to the
    /// number launched.
    pub tokens_conserved: bool,
    pub rounds: u64,
    pub total_units: u64,
    pub contender_details: Vec<ContenderSummary>,
    pub metrics: RunMetrics,
}

impl ElectionReport {
    pub fn unique_leader(&self) -> bool {
        self.outcome == Outcome::UniqueLeader
    }

    /// Index of the elected node when the outcome is unique.
    pub fn leader(&self) -> Option<usize> {
        self.unique_leader().then(|| self.leaders[0])
    }
}

/// Round budget that lets every contender run phases `0..phases`.
pub fn budget_for_phases(cfg: &ProtocolConfig, phases: u32) -> u64 {
    PhaseSchedule::new(cfg).phase(phases).start
}

/// Runs the election and returns the full execution alongside its report.
pub fn run_election(g: &Graph, cfg: &ProtocolConfig, sim: &SimConfig) -> Result<(ElectionReport, Execution<LeaderNode>)> {
    cfg.validate()?;
    let shared = Shared::new(cfg.clone());
    let mut sim = sim.clone();
    sim.unit_n.get_or_insert(cfg.n);
    let range = cfg.id_range();
    let exec = run(g, &sim, |setup| {
        let offset = match (cfg.id_space, setup.label) {
            (IdSpace::SplitByHalf, Label::Half(Half::Right)) => range,
            _ => 0,
        };
        LeaderNode::init(Arc::clone(&shared), offset, setup.rng)
    })?;
    let report = summarize(g, &shared, &exec);
    Ok((report, exec))
}

pub fn run_leader_election(g: &Graph, cfg: &ProtocolConfig, sim: &SimConfig) -> Result<ElectionReport> {
    run_election(g, cfg, sim).map(|(r, _)| r)
}

fn summarize(g: &Graph, shared: &Shared, exec: &Execution<LeaderNode>) -> ElectionReport {
    let nodes = &exec.nodes;
    let leaders: Vec<usize> = (0..nodes.len()).filter(|&u| nodes[u].decision() == Decision::Leader).collect();
    let outcome = match leaders.len() {
        0 if exec.metrics.termination == Termination::BudgetExceeded => Outcome::Inconclusive,
        0 => Outcome::NoLeader,
        1 => Outcome::UniqueLeader,
        _ => Outcome::MultipleLeaders,
    };
    let contender_details: Vec<ContenderSummary> = nodes
        .iter()
        .enumerate()
        .filter_map(|(u, node)| {
            node.contender().map(|c| ContenderSummary {
                node: u,
                id: node.id(),
                stopped: c.stopped(),
                leader: node.decision() == Decision::Leader,
                phases: c.history.clone(),
            })
        })
        .collect();

    let mut id_counts: BTreeMap<Id, usize> = BTreeMap::new();
    for node in nodes {
        *id_counts.entry(node.id()).or_default() += 1;
    }
    let id_collisions = id_counts.values().filter(|&&c| c > 1).map(|c| c - 1).sum();

    // Sum walk endings per (origin, phase) over phases whose walks finished.
    let last_round = exec.metrics.rounds_elapsed;
    let mut ended: BTreeMap<(Id, u32), u64> = BTreeMap::new();
    for node in nodes {
        for (&key, route) in node.routes() {
            *ended.entry(key).or_default() += route.ended;
        }
    }
    let tokens_conserved = ended
        .iter()
        .filter(|(&(_, p), _)| shared.schedule.phase(p).walk_end() <= last_round)
        .all(|(_, &e)| e == shared.walks);

    let mut schedule_violations = 0;
    let mut missing_routes = 0;
    for node in nodes {
        schedule_violations += node.stats().schedule_violations();
        missing_routes += node.stats().missing_routes;
    }

    ElectionReport {
        n: g.n(),
        outcome,
        leader_ids: leaders.iter().map(|&u| nodes[u].id()).collect(),
        leaders,
        contenders: contender_details.len(),
        stopped_contenders: contender_details.iter().filter(|c| c.stopped).count(),
        all_decided: contender_details.iter().all(|c| c.stopped),
        notified: nodes.iter().filter(|n| n.winner_seen()).count(),
        id_collisions,
        schedule_violations,
        missing_routes,
        tokens_conserved,
        rounds: exec.metrics.rounds_elapsed,
        total_units: exec.metrics.total_units,
        contender_details,
        metrics: exec.metrics.clone(),
    }
}
