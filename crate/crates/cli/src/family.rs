use anyhow::{bail, Context, Result};
use rwelect::graph::{
    generate_clique, generate_dumbbell, generate_hypercube, generate_lower_bound_graph, generate_random_regular,
    generate_ring, read_graph, Graph, LowerBoundSpec,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// A graph family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    Clique { n: usize },
    Hypercube { d: u32 },
    Ring { n: usize },
    RandomRegular { n: usize, d: usize },
    LowerBound { n: usize, alpha: f64 },
    Dumbbell { base: Box<GraphSpec> },
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph> {
        Ok(match self {
            GraphSpec::Clique { n } => generate_clique(*n, seed)?,
            GraphSpec::Hypercube { d } => generate_hypercube(*d, seed)?,
            GraphSpec::Ring { n } => generate_ring(*n, seed)?,
            GraphSpec::RandomRegular { n, d } => generate_random_regular(*n, *d, seed)?,
            GraphSpec::LowerBound { n, alpha } => {
                let spec = LowerBoundSpec::new(*n, *alpha)?;
                for w in &spec.warnings {
                    eprintln!("warning: {w}");
                }
                generate_lower_bound_graph(&spec, seed)?
            }
            GraphSpec::Dumbbell { base } => generate_dumbbell(&base.build(seed)?, seed)?.graph,
            GraphSpec::File { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                read_graph(&text).with_context(|| format!("parsing {}", path.display()))?
            }
        })
    }

    /// Short name used in tables.
    pub fn name(&self) -> String {
        match self {
            GraphSpec::Clique { n } => format!("clique-{n}"),
            GraphSpec::Hypercube { d } => format!("hypercube-{d}"),
            GraphSpec::Ring { n } => format!("ring-{n}"),
            GraphSpec::RandomRegular { n, d } => format!("regular-{n}-{d}"),
            GraphSpec::LowerBound { n, alpha } => format!("lowerbound-{n}-{alpha}"),
            GraphSpec::Dumbbell { base } => format!("dumbbell-{}", base.name()),
            GraphSpec::File { path } => path.display().to_string(),
        }
    }
}

/// Builds a spec from `generate` flags.
pub fn from_flags(family: &str, n: Option<usize>, d: Option<u32>, alpha: Option<f64>, base: Option<&str>) -> Result<GraphSpec> {
    let need_n = || n.context("--n is required for this family");
    let need_d = || d.context("--d is required for this family");
    Ok(match family {
        "clique" => GraphSpec::Clique { n: need_n()? },
        "hypercube" => GraphSpec::Hypercube { d: need_d()? },
        "ring" => GraphSpec::Ring { n: need_n()? },
        "random-regular" => GraphSpec::RandomRegular { n: need_n()?, d: need_d()? as usize },
        "lower-bound" => GraphSpec::LowerBound { n: need_n()?, alpha: alpha.context("--alpha is required for lower-bound")? },
        "dumbbell" => {
            let base = from_flags(base.unwrap_or("clique"), n, d, alpha, None)?;
            if matches!(base, GraphSpec::Dumbbell { .. }) {
                bail!("dumbbell base cannot itself be a dumbbell");
            }
            GraphSpec::Dumbbell { base: Box::new(base) }
        }
        other => bail!("unknown family `{other}`"),
    })
}
