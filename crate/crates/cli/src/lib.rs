//! Command-line front end: graph generation, single runs, experiment sweeps
//! and graph analysis.

pub mod analyze;
pub mod experiment;
pub mod family;
pub mod run;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rwelect::graph::{read_graph, write_graph};
use rwelect::sim::Mode;
use run::{execute, Protocol, RunSettings};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "rwelect", version, about = "Random-walk leader election simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a generated graph to a file.
    Generate(GenerateArgs),
    /// Run one protocol execution on a graph file and print its metrics.
    Run(RunArgs),
    /// Sweep graphs and seeds from a JSON spec into a CSV table.
    Experiment(ExperimentArgs),
    /// Report conductance, mixing time and their sandwich check.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// clique, hypercube, ring, random-regular, lower-bound or dumbbell
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// Hypercube dimension or regular degree.
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Base family for a dumbbell.
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, short)]
    pub graph: PathBuf,
    /// JSON file with run settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub initial_walk_length: Option<u64>,
    /// Network size the nodes are told.
    #[arg(long)]
    pub n_known: Option<usize>,
    #[arg(long)]
    pub max_phases: Option<u32>,
    #[arg(long)]
    pub round_budget: Option<u64>,
    /// Follow the election with a push-pull broadcast of the leader id.
    #[arg(long)]
    pub explicit: bool,
    #[arg(long)]
    pub source: Option<usize>,
    /// Write the envelope trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    pub spec: PathBuf,
    #[arg(long, env = "RWELECT_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub c_lo: f64,
    #[arg(long, default_value_t = 100.0)]
    pub c_hi: f64,
}

impl RunArgs {
    fn settings(&self) -> Result<RunSettings> {
        let file = match &self.config {
            Some(p) => RunSettings::load(p)?,
            None => RunSettings::default(),
        };
        Ok(file.overlay(RunSettings {
            protocol: self.protocol,
            seed: self.seed,
            mode: self.mode,
            c1: self.c1,
            c2: self.c2,
            initial_walk_length: self.initial_walk_length,
            n_known: self.n_known,
            max_phases: self.max_phases,
            round_budget: self.round_budget,
            explicit: self.explicit.then_some(true),
            source: self.source,
        }))
    }
}

fn load_graph(path: &std::path::Path) -> Result<rwelect::Graph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_graph(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Executes a parsed command, writing its report to `out`.
pub fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let spec = family::from_flags(&a.family, a.n, a.d, a.alpha, a.base.as_deref())?;
            let text = write_graph(&spec.build(a.seed)?);
            match a.out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Run(a) => {
            let g = load_graph(&a.graph)?;
            let settings = a.settings()?;
            let (summary, trace) = execute(&g, &a.graph.display().to_string(), &settings, a.trace.is_some())?;
            if let (Some(path), Some(trace)) = (&a.trace, trace) {
                let file = std::fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
                trace.write_jsonl(std::io::BufWriter::new(file))?;
            }
            match a.format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    w.write_record(run::RunSummary::CSV_HEADER)?;
                    w.write_record(summary.csv_record())?;
                    w.flush()?;
                }
            }
        }
        Command::Experiment(a) => {
            let spec = experiment::ExperimentSpec::load(&a.spec)?;
            let rows = experiment::run_experiment(&spec)?;
            let (csv_path, json_path) = experiment::write_outputs(&spec, &rows, &a.out_dir)?;
            writeln!(out, "{}\n{}", csv_path.display(), json_path.display())?;
        }
        Command::Analyze(a) => {
            let g = load_graph(&a.graph)?;
            let report = analyze::analyze(&g, a.c_lo, a.c_hi)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(())
}
