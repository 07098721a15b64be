use crate::error::{Error, Result};
use crate::sim::log2_ceil;
use serde::{Deserialize, Serialize};

/// How random ids are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdSpace {
    /// Every node draws from `[1, n^4]`.
    #[default]
    Shared,
    /// Nodes labelled as the right half of a dumbbell draw from
    /// `[n^4 + 1, 2 n^4]`; all others from `[1, n^4]`.
    SplitByHalf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub c1: f64,
    /// Must exceed 2.
    pub c2: f64,
    pub initial_walk_length: u64,
    /// Network size as known to the nodes.
    pub n: usize,
    pub id_space: IdSpace,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { c1: 2.0, c2: 3.0, initial_walk_length: 1, n: 2, id_space: IdSpace::Shared }
    }
}

fn ceil(x: f64) -> u64 {
    // absorbs representation error in products such as 0.75 * 2 * 10
    (x - 1e-9).ceil().max(0.0) as u64
}

impl ProtocolConfig {
    pub fn for_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n >= 1 << 16 {
            return Err(Error::Precondition(format!("known n must be in 2..65536, got {}", self.n)));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(Error::Precondition(format!("c1 must be positive, got {}", self.c1)));
        }
        if !(self.c2 > 2.0 && self.c2.is_finite()) {
            return Err(Error::Precondition(format!("c2 must exceed 2, got {}", self.c2)));
        }
        if self.initial_walk_length == 0 {
            return Err(Error::Precondition("initial walk length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn log2_n(&self) -> f64 {
        (self.n as f64).log2()
    }

    pub fn contender_probability(&self) -> f64 {
        (self.c1 * self.log2_n() / self.n as f64).min(1.0)
    }

    /// Walks launched per contender per phase: `ceil(c2 sqrt(n log2 n))`.
    pub fn walks_per_phase(&self) -> u64 {
        ceil(self.c2 * (self.n as f64 * self.log2_n()).sqrt())
    }

    /// Minimum number of other contenders a contender must share a proxy with.
    pub fn intersection_threshold(&self) -> u64 {
        ceil(0.75 * self.c1 * self.log2_n())
    }

    /// Minimum number of distinct proxies.
    pub fn distinctness_threshold(&self) -> u64 {
        ceil(self.c2 / 2.0 * (self.n as f64 * self.log2_n()).sqrt())
    }

    /// Ids are drawn from `[1, n^4]`.
    pub fn id_range(&self) -> u64 {
        (self.n as u64).pow(4)
    }

    /// Bits in one id: `4 ceil(log2 n)`.
    pub fn id_bits(&self) -> u64 {
        4 * log2_ceil(self.n)
    }

    /// Bits in a counter field (walk count, remaining steps, proxy tally).
    pub fn counter_bits(&self) -> u64 {
        log2_ceil(self.n)
    }
}
