//! Conductance: exact minimum over all cuts, Cheeger bounds from the
//! normalised Laplacian, and the conductance/mixing-time sandwich check.

use super::{walk::mixing_time_exact, Graph};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, RealField};
use num_rational::Ratio;
use serde::Serialize;

/// Largest `n` accepted by [`conductance_exact`]: `2^(n-1)` cuts.
pub const EXACT_CONDUCTANCE_MAX_N: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutResult {
    pub cut_edges: u64,
    pub vol_small: u64,
    pub phi: Ratio<u64>,
    /// Nodes on one side of a minimising cut.
    pub best_cut: Vec<usize>,
}

impl CutResult {
    pub fn phi_f64(&self) -> f64 {
        *self.phi.numer() as f64 / *self.phi.denom() as f64
    }
}

/// Minimum cut-conductance over every nonempty proper node subset.
///
/// Walks the `2^(n-1)` subsets that exclude the last node in Gray-code order,
/// updating the cut size and volume incrementally.
pub fn conductance_exact(g: &Graph) -> Result<CutResult> {
    let n = g.n();
    if n > EXACT_CONDUCTANCE_MAX_N {
        return Err(Error::SizeLimit { n, limit: EXACT_CONDUCTANCE_MAX_N });
    }
    if n < 2 {
        return Err(Error::InvalidSize("conductance needs at least 2 nodes".into()));
    }
    let nbr_mask: Vec<u32> = (0..n)
        .map(|u| g.neighbors(u).fold(0u32, |m, v| m | (1 << v)))
        .collect();
    let deg: Vec<u64> = (0..n).map(|u| g.degree(u) as u64).collect();
    let total_vol = 2 * g.m() as u64;

    let (mut set, mut cut, mut vol) = (0u32, 0u64, 0u64);
    let mut best: Option<(u64, u64, u32)> = None;
    for i in 1u64..(1u64 << (n - 1)) {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        let inside = (nbr_mask[v] & set & !bit).count_ones() as u64;
        if set & bit == 0 {
            set |= bit;
            cut = cut + deg[v] - 2 * inside;
            vol += deg[v];
        } else {
            set &= !bit;
            cut = cut + 2 * inside - deg[v];
            vol -= deg[v];
        }
        let small = vol.min(total_vol - vol);
        let better = match best {
            None => true,
            Some((bc, bv, _)) => (cut as u128) * (bv as u128) < (bc as u128) * (small as u128),
        };
        if better {
            best = Some((cut, small, set));
        }
    }
    let (cut_edges, vol_small, mask) = best.expect("n >= 2 gives at least one cut");
    Ok(CutResult {
        cut_edges,
        vol_small,
        phi: Ratio::new(cut_edges, vol_small),
        best_cut: (0..n).filter(|&u| mask & (1 << u) != 0).collect(),
    })
}

/// Cheeger interval for the conductance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralBounds<T> {
    /// Second-smallest eigenvalue of the normalised Laplacian
    /// `I - D^{-1/2} A D^{-1/2}`; twice the lazy walk's spectral gap.
    pub lambda2: T,
    pub lower: T,
    pub upper: T,
}

pub fn conductance_spectral_bounds<T: RealField + Copy>(g: &Graph) -> Result<SpectralBounds<T>> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidSize("spectral bounds need at least 2 nodes".into()));
    }
    let inv_sqrt: Vec<T> = (0..n)
        .map(|u| T::one() / T::from_usize(g.degree(u)).expect("degree fits").sqrt())
        .collect();
    let mut lap = DMatrix::<T>::identity(n, n);
    for u in 0..n {
        for v in g.neighbors(u) {
            lap[(u, v)] = -(inv_sqrt[u] * inv_sqrt[v]);
        }
    }
    let eps = T::default_epsilon() * T::from_f64(16.0).expect("small constant");
    let max_iter = 10_000;
    let eig = lap
        .clone()
        .try_symmetric_eigen(eps, max_iter)
        .ok_or(Error::NonConvergence { iterations: max_iter })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
    let idx = order[1];
    let lambda2 = eig.eigenvalues[idx];
    let vec = eig.eigenvectors.column(idx);
    let residual = (&lap * vec - vec * lambda2).amax();
    let residual_f64: f64 = nalgebra::try_convert(residual).unwrap_or(f64::NAN);
    if !(residual_f64 <= 1e-6) {
        return Err(Error::Numeric { residual: residual_f64 });
    }
    let lambda2 = lambda2.max(T::zero());
    let two = T::one() + T::one();
    Ok(SpectralBounds {
        lambda2,
        lower: lambda2 / two,
        upper: (two * lambda2).sqrt().min(T::one()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// `phi_low == phi_high` when the exact conductance was computed.
    pub phi_low: f64,
    pub phi_high: f64,
    pub exact: bool,
    pub t_mix: u64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub holds: bool,
}

/// Checks `c_lo/phi <= t_mix <= c_hi/phi^2`.
///
/// Uses the exact conductance when the graph is small enough; otherwise the
/// check must hold for every value in the Cheeger interval.
pub fn check_phimix_sandwich(g: &Graph, c_lo: f64, c_hi: f64) -> Result<SandwichReport> {
    let t_mix = mixing_time_exact::<f64>(g)?;
    let (phi_low, phi_high, exact) = if g.n() <= EXACT_CONDUCTANCE_MAX_N {
        let phi = conductance_exact(g)?.phi_f64();
        (phi, phi, true)
    } else {
        let b = conductance_spectral_bounds::<f64>(g)?;
        (b.lower, b.upper, false)
    };
    let t = t_mix as f64;
    let holds = c_lo / phi_low <= t && t <= c_hi / (phi_high * phi_high);
    Ok(SandwichReport { phi_low, phi_high, exact, t_mix, c_lo, c_hi, holds })
}
