//! Experiments on the clique-expanded family and on dumbbells.

use crate::error::{Error, Result};
use crate::graph::{generate_dumbbell, generate_lower_bound_graph, Graph, Half, LowerBoundSpec};
use crate::leader::{run_election, IdSpace, Outcome, ProtocolConfig};
use crate::rng::{derive_seed, seeded};
use crate::sim::{SimConfig, Trace};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use std::collections::BTreeSet;

/// Outcome of repeated blind probing for an inter-clique port.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ProbeMetrics {
    pub probes_until_crossing: Vec<u64>,
    pub mean: f64,
    pub stderr: f64,
    /// Exact expectation averaged over the cliques a trial may pick.
    pub analytic_expectation: f64,
}

/// Expected draws, without replacement, until the first of `special` marked
/// items among `total`: `(total + 1) / (special + 1)`.
pub fn first_success_expectation(total: u64, special: u64) -> Ratio<u64> {
    Ratio::new(total + 1, special + 1)
}

#[derive(Clone, Debug)]
struct CliquePorts {
    ports: Vec<bool>,
    inter: u64,
}

fn clique_ports(g: &Graph) -> Result<Vec<CliquePorts>> {
    if !g.has_clique_labels() {
        return Err(Error::MissingLabel);
    }
    let clique = |u: usize| g.label(u).clique().expect("labels checked");
    let count = (0..g.n()).map(clique).max().map_or(0, |c| c + 1);
    let mut out = vec![CliquePorts { ports: Vec::new(), inter: 0 }; count];
    for u in 0..g.n() {
        let c = clique(u);
        for t in g.port_table(u) {
            let crossing = clique(t.node) != c;
            out[c].ports.push(crossing);
            out[c].inter += u64::from(crossing);
        }
    }
    if let Some(i) = out.iter().position(|c| c.inter == 0) {
        return Err(Error::Precondition(format!("clique {i} has no inter-clique port")));
    }
    Ok(out)
}

/// Each trial picks a uniform clique and probes its ports in uniformly random
/// order until one leads to another clique.
pub fn blind_probe_experiment(g: &Graph, trials: usize, seed: u64) -> Result<ProbeMetrics> {
    let cliques = clique_ports(g)?;
    if trials == 0 {
        return Ok(ProbeMetrics::default());
    }
    let analytic = cliques
        .iter()
        .map(|c| {
            let r = first_success_expectation(c.ports.len() as u64, c.inter);
            *r.numer() as f64 / *r.denom() as f64
        })
        .sum::<f64>()
        / cliques.len() as f64;
    let mut rng = seeded(seed);
    let mut order = Vec::new();
    let probes: Vec<u64> = (0..trials)
        .map(|_| {
            let c = &cliques[rng.gen_range(0..cliques.len())];
            order.clear();
            order.extend(0..c.ports.len());
            order.shuffle(&mut rng);
            1 + order.iter().position(|&p| c.ports[p]).expect("clique has an inter-clique port") as u64
        })
        .collect();
    let (mean, stderr) = mean_stderr(&probes);
    Ok(ProbeMetrics { probes_until_crossing: probes, mean, stderr, analytic_expectation: analytic })
}

fn mean_stderr(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<u64>() as f64 / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of a sample; `None` when empty.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { (v[k / 2 - 1] + v[k / 2]) / 2.0 })
}

/// Protocol settings shared by the experiment drivers.
#[derive(Clone, Debug, Serialize)]
pub struct ElectionSettings {
    pub c1: f64,
    pub c2: f64,
    pub max_phases: u32,
    pub sim: SimConfig,
}

impl Default for ElectionSettings {
    fn default() -> Self {
        Self { c1: 2.0, c2: 3.0, max_phases: 12, sim: SimConfig::default() }
    }
}

impl ElectionSettings {
    fn protocol(&self, n: usize, id_space: IdSpace) -> ProtocolConfig {
        ProtocolConfig { c1: self.c1, c2: self.c2, n, id_space, ..ProtocolConfig::for_n(n) }
    }

    fn sim(&self, cfg: &ProtocolConfig, seed: u64) -> SimConfig {
        SimConfig {
            seed,
            round_budget: crate::leader::budget_for_phases(cfg, self.max_phases),
            ..self.sim.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundRow {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub outcome: Outcome,
    pub leaders: usize,
    pub total_units: u64,
    pub rounds: u64,
    /// Distinct inter-clique graph edges that carried traffic.
    pub inter_clique_edges: usize,
    /// Edges of the clique communication graph.
    pub cg_edges: usize,
}

/// Runs the election on one lower-bound graph per seed.
pub fn election_on_lower_bound(spec: &LowerBoundSpec, settings: &ElectionSettings, seeds: &[u64]) -> Result<Vec<LowerBoundRow>> {
    seeds
        .iter()
        .map(|&seed| {
            let g = generate_lower_bound_graph(spec, seed)?;
            let cfg = settings.protocol(g.n(), IdSpace::Shared);
            let (report, _) = run_election(&g, &cfg, &settings.sim(&cfg, seed))?;
            let clique = |u: usize| g.label(u).clique().expect("lower-bound graphs are labeled");
            let cg: BTreeSet<(usize, usize)> = report
                .metrics
                .inter_clique_edges_used
                .iter()
                .map(|&(u, v)| (clique(u).min(clique(v)), clique(u).max(clique(v))))
                .collect();
            Ok(LowerBoundRow {
                seed,
                n: g.n(),
                m: g.m(),
                outcome: report.outcome,
                leaders: report.leaders.len(),
                total_units: report.total_units,
                rounds: report.rounds,
                inter_clique_edges: report.metrics.inter_clique_edges_used.len(),
                cg_edges: cg.len(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DumbbellRow {
    pub seed: u64,
    /// Leaders when every node is told the size of one half.
    pub misinformed_leaders: usize,
    /// Leaders when nodes are told the true size.
    pub control_leaders: usize,
    /// Rounds over which each half was compared with its standalone run:
    /// everything before the first message arrived over an opened edge.
    pub replay_rounds: [u64; 2],
    /// Both halves matched their standalone runs over those rounds.
    pub replay_identical: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DumbbellReport {
    pub rows: Vec<DumbbellRow>,
    pub two_leader_runs: usize,
    pub control_at_most_one: usize,
    pub replay_all_identical: bool,
}

/// First round in which a message reached one of `open` ports' owners
/// through that port.
fn first_open_delivery(trace: &Trace, open: &[(usize, usize)]) -> Option<u64> {
    trace
        .envelopes
        .iter()
        .filter(|e| e.last_unit && open.contains(&(e.to_node, e.to_port)))
        .map(|e| e.round + 1)
        .min()
}

/// JSON-lines view of the envelopes sent by `nodes` before `cutoff`, with
/// indices shifted down by `offset`. The far end of opened ports differs by
/// construction and is blanked.
fn half_trace(trace: &Trace, nodes: std::ops::Range<usize>, offset: usize, open: &[(usize, usize)], cutoff: u64) -> String {
    let envelopes = trace
        .envelopes
        .iter()
        .filter(|e| nodes.contains(&e.from_node) && e.round < cutoff)
        .map(|e| {
            let mut e = e.clone();
            if open.contains(&(e.from_node, e.from_port)) {
                e.to_node = usize::MAX;
                e.to_port = 0;
            } else {
                e.to_node -= offset;
            }
            e.from_node -= offset;
            e
        })
        .collect();
    Trace { envelopes }.to_jsonl()
}

/// Runs with a trace over a prefix of rounds long enough to contain a
/// delivery over one of `open`, doubling the prefix as needed.
fn traced_prefix(g: &Graph, cfg: &ProtocolConfig, sim: &SimConfig, open: &[(usize, usize)]) -> Result<(Trace, Option<u64>)> {
    let mut budget = 1024;
    loop {
        let traced = SimConfig { record_trace: true, round_budget: budget.min(sim.round_budget), ..sim.clone() };
        let (_, exec) = run_election(g, cfg, &traced)?;
        let trace = exec.trace.expect("trace requested");
        let hit = first_open_delivery(&trace, open);
        if hit.is_some() || budget >= sim.round_budget || exec.metrics.termination != crate::sim::Termination::BudgetExceeded {
            return Ok((trace, hit));
        }
        budget *= 4;
    }
}

/// Dumbbell of two `g0` copies with disjoint id ranges. The misinformed run
/// tells every node `n = |g0|`; the control run tells the truth.
pub fn dumbbell_misinformation_experiment(g0: &Graph, settings: &ElectionSettings, seeds: &[u64]) -> Result<DumbbellReport> {
    let k = g0.n();
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let db = generate_dumbbell(g0, derive_seed(seed, 0xd0b))?;
        let wrong = settings.protocol(k, IdSpace::SplitByHalf);
        let sim = settings.sim(&wrong, seed);
        let report = crate::leader::run_leader_election(&db.graph, &wrong, &sim)?;

        let mut replay_identical = true;
        let mut replay_rounds = [0; 2];
        for (i, (half, open)) in [(Half::Left, db.left_open), (Half::Right, db.right_open)].into_iter().enumerate() {
            let offset = i * k;
            let open_global = [(open.low.node, open.low.port), (open.high.node, open.high.port)];
            let open_local = open_global.map(|(u, p)| (u - offset, p));
            let solo = db.standalone(half);
            let solo_sim = SimConfig { stream_offset: offset as u64, ..sim.clone() };
            let (joint, hit_joint) = traced_prefix(&db.graph, &wrong, &sim, &open_global)?;
            let (alone, hit_alone) = traced_prefix(&solo, &wrong, &solo_sim, &open_local)?;
            let cutoff = match (hit_joint, hit_alone) {
                (Some(a), Some(b)) => a.min(b),
                (a, b) => a.or(b).unwrap_or(u64::MAX),
            };
            replay_rounds[i] = cutoff.min(sim.round_budget);
            let a = half_trace(&joint, offset..offset + k, offset, &open_global, cutoff);
            let b = half_trace(&alone, 0..k, 0, &open_local, cutoff);
            replay_identical &= a == b;
        }

        let right = settings.protocol(2 * k, IdSpace::SplitByHalf);
        let control = crate::leader::run_leader_election(&db.graph, &right, &settings.sim(&right, seed))?;
        rows.push(DumbbellRow {
            seed,
            misinformed_leaders: report.leaders.len(),
            control_leaders: control.leaders.len(),
            replay_rounds,
            replay_identical,
        });
    }
    Ok(DumbbellReport {
        two_leader_runs: rows.iter().filter(|r| r.misinformed_leaders >= 2).count(),
        control_at_most_one: rows.iter().filter(|r| r.control_leaders <= 1).count(),
        replay_all_identical: rows.iter().all(|r| r.replay_identical),
        rows,
    })
}
