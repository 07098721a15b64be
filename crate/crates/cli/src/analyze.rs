use anyhow::Result;
use rwelect::graph::{
    check_phimix_sandwich, conductance_exact, conductance_spectral_bounds, mixing_time_exact, Graph, SandwichReport,
    EXACT_CONDUCTANCE_MAX_N, MIXING_TIME_MAX_N,
};
use serde::Serialize;

/// Dense eigen-solves above this size are skipped.
pub const SPECTRAL_MAX_N: usize = 2048;

#[derive(Clone, Debug, Serialize)]
pub struct ExactCut {
    pub phi: String,
    pub phi_value: f64,
    pub cut_edges: u64,
    pub vol_small: u64,
    pub best_cut: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Spectral {
    pub lambda2: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub n: usize,
    pub m: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub t_mix: Option<u64>,
    pub conductance_exact: Option<ExactCut>,
    pub conductance_spectral: Option<Spectral>,
    pub sandwich: Option<SandwichReport>,
}

pub fn analyze(g: &Graph, c_lo: f64, c_hi: f64) -> Result<Analysis> {
    let degrees = g.degrees();
    let n = g.n();
    let t_mix = if n <= MIXING_TIME_MAX_N { Some(mixing_time_exact::<f64>(g)?) } else { None };
    let exact = if n <= EXACT_CONDUCTANCE_MAX_N {
        let c = conductance_exact(g)?;
        Some(ExactCut {
            phi: c.phi.to_string(),
            phi_value: c.phi_f64(),
            cut_edges: c.cut_edges,
            vol_small: c.vol_small,
            best_cut: c.best_cut,
        })
    } else {
        None
    };
    let spectral = if n <= SPECTRAL_MAX_N {
        let b = conductance_spectral_bounds::<f64>(g)?;
        Some(Spectral { lambda2: b.lambda2, lower: b.lower, upper: b.upper })
    } else {
        None
    };
    let sandwich = if t_mix.is_some() && (exact.is_some() || spectral.is_some()) {
        Some(check_phimix_sandwich(g, c_lo, c_hi)?)
    } else {
        None
    };
    Ok(Analysis {
        n,
        m: g.m(),
        min_degree: degrees.iter().copied().min().unwrap_or(0),
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        t_mix,
        conductance_exact: exact,
        conductance_spectral: spectral,
        sandwich,
    })
}
