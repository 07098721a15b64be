//! Global phase layout. Every node derives it from `n` and the constants, so
//! all contenders agree on window boundaries without communicating.

use super::ProtocolConfig;
use serde::Serialize;

/// Boundaries of one random-walk phase, in absolute rounds.
///
/// `[start, start+T)` walks, then three exchange windows of length `T`, the
/// stop/winner decision at `start+4T`, and a `2T` wait for winner messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseWindow {
    pub index: u32,
    pub walk_length: u64,
    /// Window length `T`.
    pub window: u64,
    pub start: u64,
}

impl PhaseWindow {
    pub fn walk_end(&self) -> u64 {
        self.start + self.window
    }
    pub fn round2(&self) -> u64 {
        self.start + 2 * self.window
    }
    pub fn round3(&self) -> u64 {
        self.start + 3 * self.window
    }
    pub fn decision(&self) -> u64 {
        self.start + 4 * self.window
    }
    pub fn end(&self) -> u64 {
        self.start + 6 * self.window
    }
    pub fn length(&self) -> u64 {
        6 * self.window
    }
}

#[derive(Clone, Debug)]
pub struct PhaseSchedule {
    c1: f64,
    log2_n: f64,
    initial: u64,
}

impl PhaseSchedule {
    pub fn new(cfg: &ProtocolConfig) -> Self {
        Self { c1: cfg.c1, log2_n: cfg.log2_n(), initial: cfg.initial_walk_length }
    }

    /// `T = ceil(25/16 * c1 * t_u * log2(n)^2)`.
    pub fn window_for(&self, walk_length: u64) -> u64 {
        let t = 25.0 / 16.0 * self.c1 * walk_length as f64 * self.log2_n * self.log2_n;
        ((t - 1e-9).ceil() as u64).max(1)
    }

    pub fn phase(&self, index: u32) -> PhaseWindow {
        let mut start = 0;
        for i in 0..index {
            start += 6 * self.window_for(self.initial << i);
        }
        let walk_length = self.initial << index;
        PhaseWindow { index, walk_length, window: self.window_for(walk_length), start }
    }

    /// Phase whose span `[start, end)` contains `round`.
    pub fn phase_at(&self, round: u64) -> PhaseWindow {
        let mut p = self.phase(0);
        while p.end() <= round {
            p = self.phase(p.index + 1);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_at_n_1024() {
        let s = PhaseSchedule::new(&ProtocolConfig::for_n(1024));
        let p = s.phase(0);
        assert_eq!(p.window, 313);
        assert_eq!(p.length(), 1878);
        assert_eq!(p.start, 0);
    }

    #[test]
    fn walk_length_doubles() {
        let s = PhaseSchedule::new(&ProtocolConfig::for_n(256));
        for i in 0..8 {
            let p = s.phase(i);
            assert_eq!(p.walk_length, 1 << i);
            assert_eq!(s.phase(i + 1).start, p.end());
        }
    }

    #[test]
    fn phase_lookup_matches_boundaries() {
        let s = PhaseSchedule::new(&ProtocolConfig::for_n(64));
        for i in 0..5 {
            let p = s.phase(i);
            assert_eq!(s.phase_at(p.start).index, i);
            assert_eq!(s.phase_at(p.end() - 1).index, i);
        }
    }
}
