use anyhow::{Context, Result};
use rwelect::broadcast::{broadcast_after, push_pull_broadcast};
use rwelect::graph::Graph;
use rwelect::leader::{budget_for_phases, run_election, ProtocolConfig};
use rwelect::sim::{run, Ctx, Mode, NodeProgram, Payload, SimConfig, Termination, Trace};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    Election,
    Broadcast,
    Null,
}

/// Run parameters as they appear in a JSON config file or on the command
/// line. Unset fields fall back to the other source, then to defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub protocol: Option<Protocol>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub initial_walk_length: Option<u64>,
    /// Network size the nodes are told; defaults to the true size.
    pub n_known: Option<usize>,
    pub max_phases: Option<u32>,
    pub round_budget: Option<u64>,
    pub explicit: Option<bool>,
    /// Broadcast source node.
    pub source: Option<usize>,
}

pub const DEFAULT_MAX_PHASES: u32 = 12;

impl RunSettings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunSettings) -> RunSettings {
        RunSettings {
            protocol: over.protocol.or(self.protocol),
            seed: over.seed.or(self.seed),
            mode: over.mode.or(self.mode),
            c1: over.c1.or(self.c1),
            c2: over.c2.or(self.c2),
            initial_walk_length: over.initial_walk_length.or(self.initial_walk_length),
            n_known: over.n_known.or(self.n_known),
            max_phases: over.max_phases.or(self.max_phases),
            round_budget: over.round_budget.or(self.round_budget),
            explicit: over.explicit.or(self.explicit),
            source: over.source.or(self.source),
        }
    }

    pub fn protocol_config(&self, n: usize) -> ProtocolConfig {
        let d = ProtocolConfig::for_n(self.n_known.unwrap_or(n));
        ProtocolConfig {
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2.unwrap_or(d.c2),
            initial_walk_length: self.initial_walk_length.unwrap_or(d.initial_walk_length),
            ..d
        }
    }

    fn sim_config(&self, cfg: &ProtocolConfig, record_trace: bool) -> SimConfig {
        let budget = self
            .round_budget
            .unwrap_or_else(|| budget_for_phases(cfg, self.max_phases.unwrap_or(DEFAULT_MAX_PHASES)));
        SimConfig {
            seed: self.seed.unwrap_or(0),
            mode: self.mode.unwrap_or_default(),
            round_budget: budget,
            record_trace,
            ..SimConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BroadcastSummary {
    pub informed: usize,
    pub all_informed: bool,
    pub broadcast_rounds: u64,
    pub rounds: u64,
    pub total_units: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mode: Mode,
    pub protocol: Protocol,
    pub rounds: u64,
    pub total_units: u64,
    pub outcome: String,
    pub termination: Termination,
    pub unit_bits: u64,
    pub messages_sent: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaders: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contenders: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule_violations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens_conserved: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub broadcast: Option<BroadcastSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_know_leader: Option<bool>,
}

impl RunSummary {
    pub const CSV_HEADER: [&'static str; 8] = ["graph", "n", "m", "seed", "mode", "rounds", "total_units", "outcome"];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.graph.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.seed.to_string(),
            self.mode.to_string(),
            self.rounds.to_string(),
            self.total_units.to_string(),
            self.outcome.clone(),
        ]
    }
}

#[derive(Clone, Debug)]
enum Never {}

impl Payload for Never {
    fn bits(&self) -> u64 {
        match *self {}
    }
    fn tag(&self) -> &'static str {
        match *self {}
    }
}

struct Silent;

impl NodeProgram for Silent {
    type Msg = Never;
    fn on_round(&mut self, _: &mut Ctx<'_, Never>) {}
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

/// One deterministic execution of the configured protocol.
pub fn execute(g: &Graph, graph: &str, s: &RunSettings, record_trace: bool) -> Result<(RunSummary, Option<Trace>)> {
    let cfg = s.protocol_config(g.n());
    let sim = s.sim_config(&cfg, record_trace);
    let protocol = s.protocol.unwrap_or_default();
    let mut summary = RunSummary {
        graph: graph.to_owned(),
        n: g.n(),
        m: g.m(),
        seed: sim.seed,
        mode: sim.mode,
        protocol,
        rounds: 0,
        total_units: 0,
        outcome: String::new(),
        termination: Termination::Quiescent,
        unit_bits: 0,
        messages_sent: 0,
        leaders: None,
        contenders: None,
        schedule_violations: None,
        tokens_conserved: None,
        broadcast: None,
        all_know_leader: None,
    };
    let trace = match protocol {
        Protocol::Null => {
            let ex = run(g, &sim, |_| Silent)?;
            summary.outcome = snake(&ex.metrics.termination);
            fill_metrics(&mut summary, &ex.metrics);
            ex.trace
        }
        Protocol::Broadcast => {
            let source = s.source.unwrap_or(0);
            let (b, _) = push_pull_broadcast(g, source, source as u64 + 1, cfg.n, &sim)?;
            summary.outcome = if b.all_informed { "all_informed" } else { "partial" }.to_owned();
            fill_metrics(&mut summary, &b.metrics);
            summary.broadcast = Some(broadcast_summary(&b));
            None
        }
        Protocol::Election => {
            let (report, exec) = run_election(g, &cfg, &sim)?;
            summary.outcome = snake(&report.outcome);
            fill_metrics(&mut summary, &report.metrics);
            summary.leaders = Some(report.leaders.clone());
            summary.contenders = Some(report.contenders);
            summary.schedule_violations = Some(report.schedule_violations);
            summary.tokens_conserved = Some(report.tokens_conserved);
            if s.explicit.unwrap_or(false) {
                let ex = broadcast_after(g, &cfg, &sim, report, &exec.nodes)?;
                if let Some(b) = &ex.broadcast {
                    summary.broadcast = Some(broadcast_summary(b));
                }
                summary.all_know_leader = Some(ex.all_know_leader);
                summary.rounds = ex.rounds;
                summary.total_units = ex.total_units;
            }
            exec.trace
        }
    };
    Ok((summary, trace))
}

fn fill_metrics(s: &mut RunSummary, m: &rwelect::sim::RunMetrics) {
    s.rounds = m.rounds_elapsed;
    s.total_units = m.total_units;
    s.termination = m.termination;
    s.unit_bits = m.unit_bits;
    s.messages_sent = m.messages_sent;
}

fn broadcast_summary(b: &rwelect::broadcast::BroadcastReport) -> BroadcastSummary {
    BroadcastSummary {
        informed: b.informed,
        all_informed: b.all_informed,
        broadcast_rounds: b.broadcast_rounds,
        rounds: b.rounds,
        total_units: b.total_units,
    }
}
