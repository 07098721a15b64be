use super::{Graph, Half, Label, PortRef};
use crate::error::{Error, Result};
use crate::rng::seeded;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;
use std::collections::{BTreeSet, VecDeque};

/// Pairing-model attempts before giving up.
pub const RANDOM_REGULAR_RETRIES: usize = 1000;

const MAX_HYPERCUBE_DIM: u32 = 24;

pub fn generate_clique(n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("clique needs n >= 2, got {n}")));
    }
    let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    Graph::from_edges(n, &edges, &mut seeded(seed))
}

pub fn generate_hypercube(d: u32, seed: u64) -> Result<Graph> {
    if d == 0 || d > MAX_HYPERCUBE_DIM {
        return Err(Error::InvalidSize(format!("hypercube dimension must be in 1..={MAX_HYPERCUBE_DIM}, got {d}")));
    }
    let n = 1usize << d;
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (0..d).map(move |b| (u, u ^ (1 << b))).filter(|&(u, v)| u < v))
        .collect();
    Graph::from_edges(n, &edges, &mut seeded(seed))
}

pub fn generate_ring(n: usize, seed: u64) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|u| (u.min((u + 1) % n), u.max((u + 1) % n))).collect();
    Graph::from_edges(n, &edges, &mut seeded(seed))
}

pub fn generate_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    let mut rng = seeded(seed);
    let edges = random_regular_edges(n, d, &mut rng)?;
    Graph::from_edges(n, &edges, &mut rng)
}

/// Pairing model with full rejection of loops, multi-edges and disconnected
/// samples.
fn random_regular_edges<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidSize(format!("random regular graph needs n >= 2 and d >= 1 (n={n}, d={d})")));
    }
    if (n * d) % 2 == 1 || d >= n {
        return Err(Error::InfeasibleDegree { n, d });
    }
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    'attempt: for _ in 0..RANDOM_REGULAR_RETRIES {
        points.shuffle(rng);
        let mut edges = BTreeSet::new();
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !edges.insert((u, v)) {
                continue 'attempt;
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        if edge_list_connected(n, &edges) {
            return Ok(edges);
        }
    }
    Err(Error::GenerationFailure {
        attempts: RANDOM_REGULAR_RETRIES,
        reason: format!("no simple connected {d}-regular sample on {n} nodes"),
    })
}

fn edge_list_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Parameters of the clique-expanded random 4-regular family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundSpec {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    /// Number of cliques (super-nodes of the 4-regular skeleton).
    pub super_nodes: usize,
    pub clique_size: usize,
    pub warnings: Vec<String>,
}

fn near_integer(x: f64) -> Option<f64> {
    let r = x.round();
    ((x - r).abs() < 1e-9).then_some(r)
}

impl LowerBoundSpec {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidSpec(format!("n must be at least 16, got {n}")));
        }
        let nf = n as f64;
        if !(alpha > 1.0 / (nf * nf) && alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must lie in (1/n^2, 1), got {alpha}")));
        }
        let epsilon = (1.0 / alpha).log2() / (2.0 * nf.log2());
        let super_f = nf.powf(1.0 - epsilon);
        let super_nodes = near_integer(super_f).unwrap_or(super_f.floor()) as usize;
        let clique_f = nf.powf(epsilon);
        let clique_size = near_integer(clique_f).unwrap_or(clique_f.ceil()) as usize;
        if super_nodes < 5 {
            return Err(Error::InvalidSpec(format!("{super_nodes} super-nodes cannot carry a simple 4-regular graph")));
        }
        if clique_size < 4 {
            return Err(Error::InvalidSpec(format!("clique size {clique_size} cannot host 4 external-edged nodes")));
        }
        let mut warnings = Vec::new();
        if alpha >= 1.0 / 144.0 {
            warnings.push(format!("alpha = {alpha} is at or above 1/144"));
        }
        if clique_size == 4 {
            warnings.push("clique size 4: every clique node is external-edged".into());
        }
        Ok(Self { n, alpha, epsilon, super_nodes, clique_size, warnings })
    }

    pub fn total_nodes(&self) -> usize {
        self.super_nodes * self.clique_size
    }
}

/// Replaces each node of a random 4-regular skeleton by a clique, attaches
/// each skeleton edge to a fresh random clique member, and deletes two
/// intra-clique edges pairing up the four external-edged members.
pub fn generate_lower_bound_graph(spec: &LowerBoundSpec, seed: u64) -> Result<Graph> {
    let checked = LowerBoundSpec::new(spec.n, spec.alpha)?;
    if checked.super_nodes != spec.super_nodes || checked.clique_size != spec.clique_size {
        return Err(Error::InvalidSpec("derived fields do not match n and alpha".into()));
    }
    let (k, big_n) = (spec.clique_size, spec.super_nodes);
    let mut rng = seeded(seed);
    let skeleton = random_regular_edges(big_n, 4, &mut rng)?;

    // Four distinct members per clique, consumed in skeleton-edge order.
    let external: Vec<Vec<usize>> = (0..big_n)
        .map(|c| index::sample(&mut rng, k, 4).into_iter().map(|i| c * k + i).collect())
        .collect();
    let mut next = vec![0usize; big_n];
    let mut take = |c: usize| {
        let u = external[c][next[c]];
        next[c] += 1;
        u
    };

    let mut edges = BTreeSet::new();
    for &(a, b) in &skeleton {
        let (u, v) = (take(a), take(b));
        edges.insert((u.min(v), u.max(v)));
    }
    for (c, ext) in external.iter().enumerate() {
        let removed = [
            (ext[0].min(ext[1]), ext[0].max(ext[1])),
            (ext[2].min(ext[3]), ext[2].max(ext[3])),
        ];
        let base = c * k;
        for u in base..base + k {
            for v in u + 1..base + k {
                if !removed.contains(&(u, v)) {
                    edges.insert((u, v));
                }
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let labels = (0..big_n * k).map(|u| Label::Clique(u / k)).collect();
    Graph::from_edges(big_n * k, &edges, &mut rng)?.with_labels(labels)
}

/// An edge removed from one half of a dumbbell; its two ports became bridge
/// endpoints. `low.node < high.node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OpenEdge {
    pub low: PortRef,
    pub high: PortRef,
}

/// Two opened copies of a 2-connected graph joined by two bridges.
///
/// Left-half nodes are `0..half_size`, right-half nodes are
/// `half_size..2*half_size`; node `i` of the right half is copy node
/// `i - half_size`.
#[derive(Clone, Debug)]
pub struct Dumbbell {
    pub graph: Graph,
    pub half_size: usize,
    pub left_open: OpenEdge,
    pub right_open: OpenEdge,
}

impl Dumbbell {
    /// The two bridges `(low_left, low_right)` and `(high_left, high_right)`.
    pub fn bridges(&self) -> [(PortRef, PortRef); 2] {
        [
            (self.left_open.low, self.right_open.low),
            (self.left_open.high, self.right_open.high),
        ]
    }

    pub fn is_bridge_port(&self, node: usize, port: usize) -> bool {
        let p = PortRef { node, port };
        [self.left_open.low, self.left_open.high, self.right_open.low, self.right_open.high].contains(&p)
    }

    pub fn half_of(&self, node: usize) -> Half {
        if node < self.half_size {
            Half::Left
        } else {
            Half::Right
        }
    }

    /// The half as a standalone graph: same port numbers, with the removed
    /// edge restored between its two open ports. Nodes are renumbered from 0.
    pub fn standalone(&self, half: Half) -> Graph {
        let (offset, open) = match half {
            Half::Left => (0, self.left_open),
            Half::Right => (self.half_size, self.right_open),
        };
        let mut ports: Vec<Vec<PortRef>> = (offset..offset + self.half_size)
            .map(|u| {
                self.graph
                    .port_table(u)
                    .iter()
                    .map(|t| PortRef { node: t.node.wrapping_sub(offset), port: t.port })
                    .collect()
            })
            .collect();
        let (lo, hi) = (open.low, open.high);
        ports[lo.node - offset][lo.port - 1] = PortRef { node: hi.node - offset, port: hi.port };
        ports[hi.node - offset][hi.port - 1] = PortRef { node: lo.node - offset, port: lo.port };
        Graph::from_port_table(ports, vec![Label::Half(half); self.half_size])
            .expect("restoring the removed edge yields the original copy")
    }
}

pub fn generate_dumbbell(g0: &Graph, seed: u64) -> Result<Dumbbell> {
    if !g0.is_two_connected() {
        return Err(Error::Precondition("dumbbell base graph must be 2-connected".into()));
    }
    let k = g0.n();
    let mut rng = seeded(seed);
    let base_edges = g0.edges();
    let left = Graph::from_edges(k, &base_edges, &mut rng)?;
    let right = Graph::from_edges(k, &base_edges, &mut rng)?;
    let el = base_edges[rng.gen_range(0..base_edges.len())];
    let er = base_edges[rng.gen_range(0..base_edges.len())];

    let open = |g: &Graph, (u, v): (usize, usize), offset: usize| OpenEdge {
        low: PortRef { node: u + offset, port: g.port_to(u, v).expect("edge") },
        high: PortRef { node: v + offset, port: g.port_to(v, u).expect("edge") },
    };
    let left_open = open(&left, el, 0);
    let right_open = open(&right, er, k);

    let mut ports: Vec<Vec<PortRef>> = Vec::with_capacity(2 * k);
    for (g, offset) in [(&left, 0), (&right, k)] {
        for u in 0..k {
            ports.push(
                g.port_table(u)
                    .iter()
                    .map(|t| PortRef { node: t.node + offset, port: t.port })
                    .collect(),
            );
        }
    }
    for (a, b) in [(left_open.low, right_open.low), (left_open.high, right_open.high)] {
        ports[a.node][a.port - 1] = b;
        ports[b.node][b.port - 1] = a;
    }
    let labels = (0..2 * k)
        .map(|u| Label::Half(if u < k { Half::Left } else { Half::Right }))
        .collect();
    let graph = Graph::from_port_table(ports, labels)?;
    Ok(Dumbbell { graph, half_size: k, left_open, right_open })
}
