use serde::{Deserialize, Serialize};

/// Message-size regime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One `B`-bit unit per edge direction per round, `B = ceil(log2 n)`.
    #[default]
    Congest,
    /// One `B^3`-bit unit per edge direction per round.
    Relaxed,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Congest => "congest",
            Mode::Relaxed => "relaxed",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "congest" => Ok(Mode::Congest),
            "relaxed" => Ok(Mode::Relaxed),
            _ => Err(format!("unknown mode `{s}` (expected congest or relaxed)")),
        }
    }
}

/// `ceil(log2 n)`, at least 1.
pub fn log2_ceil(n: usize) -> u64 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as u64
}

/// Bits carried by one unit.
pub fn unit_bits(n: usize, mode: Mode) -> u64 {
    let b = log2_ceil(n);
    match mode {
        Mode::Congest => b,
        Mode::Relaxed => b * b * b,
    }
}

/// Number of units needed for a payload of `bits` bits.
pub fn account_payload(bits: u64, mode: Mode, n: usize) -> u64 {
    bits.max(1).div_ceil(unit_bits(n, mode))
}
