use rand::Rng;

/// Outcome of one lazy step for a bundle of walks at a node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkSplit {
    pub stay: u64,
    /// `(port, count)` for every port that received at least one walk,
    /// ascending by port.
    pub moves: Vec<(usize, u64)>,
}

impl WalkSplit {
    pub fn total(&self) -> u64 {
        self.stay + self.moves.iter().map(|&(_, c)| c).sum::<u64>()
    }
}

/// Moves `count` independent lazy walks one step: each stays with
/// probability 1/2, otherwise leaves through a uniformly chosen port.
pub fn walk_step<R: Rng + ?Sized>(count: u64, degree: usize, rng: &mut R) -> WalkSplit {
    let mut stay = 0;
    let mut ports = Vec::new();
    for _ in 0..count {
        if rng.gen_bool(0.5) {
            stay += 1;
        } else {
            ports.push(rng.gen_range(1..=degree));
        }
    }
    ports.sort_unstable();
    let mut moves: Vec<(usize, u64)> = Vec::new();
    for p in ports {
        match moves.last_mut() {
            Some((q, c)) if *q == p => *c += 1,
            _ => moves.push((p, 1)),
        }
    }
    WalkSplit { stay, moves }
}
