use crate::family::GraphSpec;
use crate::run::{execute, RunSettings, RunSummary};
use anyhow::{bail, Context, Result};
use rwelect::graph::mixing_time_exact;
use rwelect::lowerbound::median;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize)]
pub struct GraphEntry {
    #[serde(flatten)]
    pub spec: GraphSpec,
    /// Generator seed; the graph is fixed across run seeds.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub graphs: Vec<GraphEntry>,
    #[serde(default)]
    pub settings: RunSettings,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub seed_count: Option<u64>,
    /// Largest graph for which the mixing time (and the normalized columns)
    /// is computed.
    #[serde(default = "default_tmix_max_n")]
    pub tmix_max_n: usize,
    /// CSV file name inside the output directory.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_tmix_max_n() -> usize {
    1024
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.graphs.is_empty() {
            bail!("experiment lists no graphs");
        }
        if self.seed_list().is_empty() {
            bail!("experiment needs at least one seed (`seeds` or `seed_count`)");
        }
        Ok(())
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match (&self.seeds, self.seed_count) {
            (Some(s), _) => s.clone(),
            (None, Some(k)) => (0..k).collect(),
            (None, None) => Vec::new(),
        }
    }

    fn stem(&self) -> String {
        match &self.output {
            Some(o) => Path::new(o).file_stem().map_or("experiment".into(), |s| s.to_string_lossy().into_owned()),
            None => self.name.clone().unwrap_or_else(|| "experiment".into()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRow {
    #[serde(flatten)]
    pub run: RunSummary,
    pub t_mix: Option<u64>,
    /// `total_units / (sqrt(n) * log2(n)^3.5 * t_mix)`.
    pub units_normalized: Option<f64>,
    /// `rounds / (t_mix * log2(n)^2)`.
    pub rounds_normalized: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 13] = [
    "graph",
    "n",
    "m",
    "seed",
    "mode",
    "rounds",
    "total_units",
    "outcome",
    "leaders",
    "contenders",
    "t_mix",
    "units_normalized",
    "rounds_normalized",
];

impl ExperimentRow {
    fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut rec = self.run.csv_record();
        rec.push(opt(self.run.leaders.as_ref().map(|l| l.len().to_string())));
        rec.push(opt(self.run.contenders.map(|c| c.to_string())));
        rec.push(opt(self.t_mix.map(|t| t.to_string())));
        rec.push(opt(self.units_normalized.map(|x| format!("{x:.6}"))));
        rec.push(opt(self.rounds_normalized.map(|x| format!("{x:.6}"))));
        rec
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphSummary {
    pub graph: String,
    pub n: usize,
    pub runs: usize,
    pub unique_leader_runs: usize,
    pub median_rounds: Option<f64>,
    pub median_units: Option<f64>,
}

/// Runs every (graph, seed) pair in order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    spec.validate()?;
    let seeds = spec.seed_list();
    let mut rows = Vec::new();
    for entry in &spec.graphs {
        let g = entry.spec.build(entry.seed).with_context(|| format!("building {}", entry.spec.name()))?;
        let t_mix = if g.n() <= spec.tmix_max_n { Some(mixing_time_exact::<f64>(&g)?) } else { None };
        let log2n = (g.n() as f64).log2();
        for &seed in &seeds {
            let settings = spec.settings.clone().overlay(RunSettings { seed: Some(seed), ..RunSettings::default() });
            let (run, _) = execute(&g, &entry.spec.name(), &settings, false)?;
            let t = t_mix.filter(|&t| t > 0).map(|t| t as f64);
            rows.push(ExperimentRow {
                units_normalized: t.map(|t| run.total_units as f64 / ((g.n() as f64).sqrt() * log2n.powf(3.5) * t)),
                rounds_normalized: t.map(|t| run.rounds as f64 / (t * log2n * log2n)),
                t_mix,
                run,
            });
        }
    }
    Ok(rows)
}

pub fn summarize(rows: &[ExperimentRow]) -> Vec<GraphSummary> {
    let mut out: Vec<GraphSummary> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if out.last().map_or(true, |s| s.graph != row.run.graph) {
            let group: Vec<&ExperimentRow> = rows[i..].iter().take_while(|r| r.run.graph == row.run.graph).collect();
            let rounds: Vec<f64> = group.iter().map(|r| r.run.rounds as f64).collect();
            let units: Vec<f64> = group.iter().map(|r| r.run.total_units as f64).collect();
            out.push(GraphSummary {
                graph: row.run.graph.clone(),
                n: row.run.n,
                runs: group.len(),
                unique_leader_runs: group.iter().filter(|r| r.run.outcome == "unique_leader").count(),
                median_rounds: median(&rounds),
                median_units: median(&units),
            });
        }
    }
    out
}

pub fn write_csv<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`, returning both paths.
pub fn write_outputs(spec: &ExperimentSpec, rows: &[ExperimentRow], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = spec.stem();
    let csv_path = dir.join(spec.output.clone().unwrap_or_else(|| format!("{stem}.csv")));
    let json_path = dir.join(format!("{stem}.json"));
    let file = std::fs::File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    write_csv(rows, file)?;
    let summary = serde_json::to_string_pretty(&summarize(rows))?;
    std::fs::write(&json_path, summary + "\n").with_context(|| format!("writing {}", json_path.display()))?;
    Ok((csv_path, json_path))
}
