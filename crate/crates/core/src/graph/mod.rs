//! Anonymous port-numbered graphs.
//!
//! Every node addresses its neighbours through local ports `1..=deg(u)`. The
//! port a node uses for an edge is unrelated to the port its neighbour uses
//! for the same edge.

mod conductance;
mod format;
mod generators;
mod walk;

pub use conductance::{
    check_phimix_sandwich, conductance_exact, conductance_spectral_bounds, CutResult,
    SandwichReport, SpectralBounds, EXACT_CONDUCTANCE_MAX_N,
};
pub use format::{read_graph, write_graph};
pub use generators::{
    generate_clique, generate_dumbbell, generate_hypercube, generate_lower_bound_graph,
    generate_random_regular, generate_ring, Dumbbell, LowerBoundSpec, OpenEdge,
    RANDOM_REGULAR_RETRIES,
};
pub use walk::{
    mixing_time_exact, mixing_time_profile, stationary_distribution, transition_matrix,
    walk_analysis, Matrix, MixingProfile, WalkAnalysis, MIXING_TIME_MAX_N,
};

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

/// One side of a port: a node and a 1-based port number at that node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct PortRef {
    pub node: usize,
    pub port: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Half {
    Left,
    Right,
}

/// Per-node metadata carried by some generators. Nodes never see it; it is
/// used by the harness (id spaces, clique accounting).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    #[default]
    None,
    Clique(usize),
    Half(Half),
}

impl Label {
    pub fn clique(self) -> Option<usize> {
        match self {
            Label::Clique(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::None => f.write_str("-"),
            Label::Clique(c) => write!(f, "clique:{c}"),
            Label::Half(Half::Left) => f.write_str("left"),
            Label::Half(Half::Right) => f.write_str("right"),
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "-" => Ok(Label::None),
            "left" => Ok(Label::Half(Half::Left)),
            "right" => Ok(Label::Half(Half::Right)),
            _ => s
                .strip_prefix("clique:")
                .and_then(|c| c.parse().ok())
                .map(Label::Clique)
                .ok_or_else(|| format!("unknown label `{s}`")),
        }
    }
}

/// A connected simple graph with an explicit port table per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    ports: Vec<Vec<PortRef>>,
    labels: Vec<Label>,
}

impl Graph {
    /// Builds a graph from an undirected edge list, permuting each node's
    /// ports uniformly at random.
    pub fn from_edges<R: Rng + ?Sized>(n: usize, edges: &[(usize, usize)], rng: &mut R) -> Result<Self> {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Precondition(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::Precondition(format!("self-loop at node {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Precondition(format!("parallel edge ({u},{v})")));
            }
            incident[u].push(v);
            incident[v].push(u);
        }
        // port_of[u] maps neighbour -> port, assigned by a shuffle of the
        // sorted neighbour list so the result depends only on the rng.
        let mut port_of: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
        for nbrs in incident.iter_mut() {
            nbrs.sort_unstable();
            let mut order = nbrs.clone();
            order.shuffle(rng);
            let mut map: Vec<(usize, usize)> =
                order.into_iter().enumerate().map(|(i, v)| (v, i + 1)).collect();
            map.sort_unstable();
            port_of.push(map);
        }
        let lookup = |u: usize, v: usize| -> usize {
            let row = &port_of[u];
            row[row.binary_search_by_key(&v, |&(w, _)| w).expect("incident")].1
        };
        let mut ports: Vec<Vec<PortRef>> = incident
            .iter()
            .map(|nb| vec![PortRef { node: 0, port: 0 }; nb.len()])
            .collect();
        for (u, nbrs) in incident.iter().enumerate() {
            for &v in nbrs {
                let pu = lookup(u, v);
                let pv = lookup(v, u);
                ports[u][pu - 1] = PortRef { node: v, port: pv };
            }
        }
        Self::from_port_table(ports, vec![Label::None; n])
    }

    /// Builds a graph from an explicit port table, checking every structural
    /// invariant.
    pub fn from_port_table(ports: Vec<Vec<PortRef>>, labels: Vec<Label>) -> Result<Self> {
        let g = Graph { ports, labels };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.ports.len();
        if self.labels.len() != n {
            return Err(Error::Precondition("label count differs from node count".into()));
        }
        if n == 0 {
            return Err(Error::InvalidSize("graph has no nodes".into()));
        }
        for (u, row) in self.ports.iter().enumerate() {
            let mut nbrs = BTreeSet::new();
            for (i, t) in row.iter().enumerate() {
                let p = i + 1;
                if t.node >= n {
                    return Err(Error::Precondition(format!("port {p} of node {u} leads outside the graph")));
                }
                if t.node == u {
                    return Err(Error::Precondition(format!("self-loop at node {u}")));
                }
                if !nbrs.insert(t.node) {
                    return Err(Error::Precondition(format!("parallel edge ({u},{})", t.node)));
                }
                let back = self.ports[t.node].get(t.port.wrapping_sub(1));
                if back != Some(&PortRef { node: u, port: p }) {
                    return Err(Error::Precondition(format!("port {p} of node {u} is not matched by its peer")));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::Precondition("graph is not connected".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.ports.len()
    }

    pub fn m(&self) -> usize {
        self.ports.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.ports[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.ports.iter().map(Vec::len).collect()
    }

    /// Where port `port` (1-based) of node `u` leads.
    pub fn peer(&self, u: usize, port: usize) -> PortRef {
        self.ports[u][port - 1]
    }

    pub fn port_table(&self, u: usize) -> &[PortRef] {
        &self.ports[u]
    }

    /// The port at `u` that leads to `v`, if they are adjacent.
    pub fn port_to(&self, u: usize, v: usize) -> Option<usize> {
        self.ports[u].iter().position(|t| t.node == v).map(|i| i + 1)
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.ports[u].iter().map(|t| t.node)
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .ports
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |t| u < t.node).map(move |t| (u, t.node)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn label(&self, u: usize) -> Label {
        self.labels[u]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Precondition("label count differs from node count".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn has_clique_labels(&self) -> bool {
        self.labels.iter().all(|l| matches!(l, Label::Clique(_)))
    }

    pub fn is_connected(&self) -> bool {
        self.component_size_without(None) == self.n()
    }

    fn component_size_without(&self, removed: Option<usize>) -> usize {
        let n = self.n();
        let Some(start) = (0..n).find(|&u| Some(u) != removed) else {
            return 0;
        };
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if !seen[v] && Some(v) != removed {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    /// True iff the graph has at least 3 nodes and no articulation point.
    pub fn is_two_connected(&self) -> bool {
        let n = self.n();
        n >= 3 && self.is_connected() && (0..n).all(|u| self.component_size_without(Some(u)) == n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)], &mut seeded(0)).unwrap()
    }

    #[test]
    fn ports_are_mutual() {
        let g = generate_hypercube(4, 7).unwrap();
        for u in 0..g.n() {
            for p in 1..=g.degree(u) {
                let t = g.peer(u, p);
                assert_eq!(g.peer(t.node, t.port), PortRef { node: u, port: p });
            }
        }
    }

    #[test]
    fn port_shuffle_depends_on_rng() {
        let a = generate_clique(8, 1).unwrap();
        let b = generate_clique(8, 2).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_ne!(a, b);
        assert_eq!(a, generate_clique(8, 1).unwrap());
    }

    #[test]
    fn bad_edge_lists_are_rejected() {
        let mut rng = seeded(0);
        assert!(Graph::from_edges(2, &[(0, 0)], &mut rng).is_err());
        assert!(Graph::from_edges(2, &[(0, 1), (1, 0)], &mut rng).is_err());
        assert!(Graph::from_edges(3, &[(0, 1)], &mut rng).is_err());
        assert!(Graph::from_edges(2, &[(0, 2)], &mut rng).is_err());
    }

    #[test]
    fn unmatched_port_tables_are_rejected() {
        let ports = vec![vec![PortRef { node: 1, port: 1 }], vec![PortRef { node: 0, port: 2 }]];
        assert!(Graph::from_port_table(ports, vec![Label::None; 2]).is_err());
    }

    #[test]
    fn labels_round_trip_through_text() {
        for l in [Label::None, Label::Clique(12), Label::Half(Half::Left), Label::Half(Half::Right)] {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        assert!("clique:x".parse::<Label>().is_err());
    }

    #[test]
    fn two_connectivity() {
        assert!(generate_ring(5, 0).unwrap().is_two_connected());
        assert!(!path3().is_two_connected());
        assert!(generate_clique(3, 0).unwrap().is_two_connected());
    }

    #[test]
    fn port_lookup() {
        let g = path3();
        let p = g.port_to(1, 2).unwrap();
        assert_eq!(g.peer(1, p).node, 2);
        assert_eq!(g.port_to(0, 2), None);
        assert_eq!(g.neighbors(1).collect::<BTreeSet<_>>(), BTreeSet::from([0, 2]));
    }
}
