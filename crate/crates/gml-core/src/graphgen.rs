//! Random graph generators: Erdős–Rényi, Barabási–Albert preferential
//! attachment, configuration-model stub matching, degree-preserving edge
//! rewiring, and the labeled two-class benchmarks built from them.
//!
//! Every generator is a pure function of (parameters, seed).

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::graph::Graph;
use crate::rng::{child_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub enum GraphGenError {
    /// Edge probability outside [0,1].
    InvalidEdgeProbability(f64),
    /// Node count must be positive.
    ZeroNodes,
    /// BA attachment count must satisfy 1 <= m < n.
    InvalidAttachment { m: usize, n: usize },
    /// Degree sequence sums to an odd number; no graph realizes it.
    OddDegreeSum { sum: usize },
    /// Stub matching kept producing self-loops or multi-edges.
    RealizationFailed { attempts: usize },
    /// Benchmark class size must be divisible by the number of BA shares.
    BadClassCount { count: usize },
    /// Benchmark graphs need n >= 10 so the five m shares make sense.
    GraphTooSmall { n: usize },
}

impl fmt::Display for GraphGenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphGenError::InvalidEdgeProbability(p) => {
                write!(f, "edge probability {p} outside [0,1]")
            }
            GraphGenError::ZeroNodes => write!(f, "node count must be at least 1"),
            GraphGenError::InvalidAttachment { m, n } => {
                write!(f, "attachment count m={m} must satisfy 1 <= m < n={n}")
            }
            GraphGenError::OddDegreeSum { sum } => {
                write!(f, "degree sum {sum} is odd; not realizable")
            }
            GraphGenError::RealizationFailed { attempts } => {
                write!(f, "stub matching failed to produce a simple graph in {attempts} attempts")
            }
            GraphGenError::BadClassCount { count } => {
                write!(f, "count per class {count} must be a positive multiple of 5")
            }
            GraphGenError::GraphTooSmall { n } => {
                write!(f, "benchmark graphs need n >= 10, got {n}")
            }
        }
    }
}

/// A prescribed degree for every node, with an even sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<usize>,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<usize>) -> Result<Self, GraphGenError> {
        let sum: usize = degrees.iter().sum();
        if sum % 2 != 0 {
            return Err(GraphGenError::OddDegreeSum { sum });
        }
        Ok(DegreeSequence { degrees })
    }

    pub fn of_graph(g: &Graph) -> Self {
        DegreeSequence {
            degrees: g.degrees(),
        }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

/// Erdős–Rényi G(n, p): each unordered pair is an edge independently with
/// probability p.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph, GraphGenError> {
    if n == 0 {
        return Err(GraphGenError::ZeroNodes);
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(GraphGenError::InvalidEdgeProbability(p));
    }
    let mut rng = rng_from_seed(seed);
    let mut g = Graph::empty(n).expect("n >= 1");
    for i in 0..n {
        for j in (i + 1)..n {
            // gen::<f64>() samples [0,1), so p=1 keeps every edge.
            if rng.gen::<f64>() < p {
                g.insert_edge(i, j).expect("in bounds");
            }
        }
    }
    Ok(g)
}

/// Barabási–Albert preferential attachment. Starts from m isolated nodes;
/// each new node attaches to m distinct existing nodes with probability
/// proportional to current degree (uniformly while all degrees are zero).
/// The construction always produces exactly m*(n-m) edges.
pub fn gen_ba(n: usize, m: usize, seed: u64) -> Result<Graph, GraphGenError> {
    if n == 0 {
        return Err(GraphGenError::ZeroNodes);
    }
    if m == 0 || m >= n {
        return Err(GraphGenError::InvalidAttachment { m, n });
    }
    let mut rng = rng_from_seed(seed);
    let mut g = Graph::empty(n).expect("n >= 1");
    // One entry per half-edge; sampling an entry uniformly is sampling a
    // node proportionally to its degree.
    let mut stubs: Vec<usize> = Vec::with_capacity(2 * m * (n - m));
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for new_node in m..n {
        chosen.clear();
        if stubs.is_empty() {
            // First attachment: all existing degrees are zero, pick uniformly.
            let mut candidates: Vec<usize> = (0..new_node).collect();
            candidates.shuffle(&mut rng);
            chosen.extend_from_slice(&candidates[..m]);
        } else {
            while chosen.len() < m {
                let pick = stubs[rng.gen_range(0..stubs.len())];
                if !chosen.contains(&pick) {
                    chosen.push(pick);
                }
            }
        }
        for &target in chosen.iter() {
            g.insert_edge(new_node, target).expect("in bounds");
            stubs.push(new_node);
            stubs.push(target);
        }
    }
    Ok(g)
}

/// Configuration model by stub matching: pair half-edges uniformly at
/// random; if the matching contains a self-loop or a multi-edge, throw the
/// whole matching away and start over, up to `max_retries` attempts.
///
/// The output degree sequence equals `deg` exactly. Dense sequences are all
/// but certain to collide every attempt; see `rewire_preserving_degrees`
/// for the rewiring route that the benchmarks use.
pub fn config_rewire(
    deg: &DegreeSequence,
    seed: u64,
    max_retries: usize,
) -> Result<Graph, GraphGenError> {
    if deg.is_empty() {
        return Err(GraphGenError::ZeroNodes);
    }
    let n = deg.len();
    let mut stubs: Vec<usize> = Vec::new();
    for (node, &d) in deg.degrees().iter().enumerate() {
        stubs.extend(core::iter::repeat(node).take(d));
    }
    let mut rng = rng_from_seed(seed);
    'attempt: for _ in 0..max_retries {
        stubs.shuffle(&mut rng);
        let mut g = Graph::empty(n).expect("n >= 1");
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || g.has_edge(u, v) {
                continue 'attempt;
            }
            g.insert_edge(u, v).expect("in bounds");
        }
        return Ok(g);
    }
    Err(GraphGenError::RealizationFailed {
        attempts: max_retries,
    })
}

/// Degree-preserving rewiring by double edge swaps: repeatedly pick two
/// edges (a,b), (c,d) with four distinct endpoints and replace them with
/// (a,d), (c,b) when neither replacement already exists. Degrees never
/// change; after ~30 attempted swaps per edge the edge placement retains
/// nothing of the source beyond its degree sequence.
pub fn rewire_preserving_degrees(g: &Graph, seed: u64) -> Graph {
    let mut edges = g.edges();
    if edges.len() < 2 {
        return g.clone();
    }
    let mut out = g.clone();
    let mut rng = rng_from_seed(seed);
    let attempts = 30 * edges.len();
    for _ in 0..attempts {
        let i = rng.gen_range(0..edges.len());
        let j = rng.gen_range(0..edges.len());
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.gen::<bool>() {
            core::mem::swap(&mut c, &mut d);
        }
        // swap to (a,d), (c,b)
        if a == c || a == d || b == c || b == d {
            continue;
        }
        if out.has_edge(a, d) || out.has_edge(c, b) {
            continue;
        }
        out.remove_edge(a, b);
        out.remove_edge(c, d);
        out.insert_edge(a, d).expect("in bounds");
        out.insert_edge(c, b).expect("in bounds");
        edges[i] = (a, d);
        edges[j] = (c, b);
    }
    out
}

/// Relabel nodes by a uniformly random permutation: adjacency P.A.Pᵀ.
pub fn permute_nodes(g: &Graph, seed: u64) -> Graph {
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    apply_permutation(g, &perm)
}

/// Relabel nodes so old node i becomes `perm[i]`.
pub fn apply_permutation(g: &Graph, perm: &[usize]) -> Graph {
    assert_eq!(perm.len(), g.n(), "permutation length mismatch");
    let mut edges = Vec::with_capacity(g.edge_count());
    for (u, v) in g.edges() {
        edges.push((perm[u], perm[v]));
    }
    Graph::from_edges(g.n(), &edges).expect("permutation preserves simplicity")
}

/// Which two populations a benchmark distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// Real BA graphs vs density-matched Erdős–Rényi graphs.
    BaVsEr,
    /// Real BA graphs vs degree-preserving rewirings of themselves.
    BaVsConfig,
}

impl BenchmarkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkKind::BaVsEr => "ba_vs_er",
            BenchmarkKind::BaVsConfig => "ba_vs_config",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: Graph,
    /// 0 = real BA, 1 = the other class.
    pub label: usize,
}

/// A labeled two-class graph set.
///
/// Layout: indices 0..count_per_class are the real BA graphs (label 0),
/// indices count_per_class.. are the other class (label 1). For
/// `BaVsConfig` the fake at offset k is the rewiring of the real at
/// offset k.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub kind: BenchmarkKind,
    pub n: usize,
    pub count_per_class: usize,
    pub graphs: Vec<LabeledGraph>,
}

impl Benchmark {
    pub fn reals(&self) -> impl Iterator<Item = &Graph> {
        self.graphs[..self.count_per_class].iter().map(|lg| &lg.graph)
    }

    pub fn fakes(&self) -> impl Iterator<Item = &Graph> {
        self.graphs[self.count_per_class..].iter().map(|lg| &lg.graph)
    }
}

/// The five BA attachment counts used for a graph size n:
/// {1, n/8, n/4, 3n/8, n/2}, rounded half-up, floored at 1.
pub fn ba_attachment_counts(n: usize) -> [usize; 5] {
    let round = |num: usize, den: usize| -> usize {
        let m = (2 * num + den) / (2 * den);
        m.max(1)
    };
    [
        1,
        round(n, 8),
        round(n, 4),
        round(3 * n, 8),
        round(n, 2),
    ]
}

/// Build a labeled benchmark of `count_per_class` real BA graphs (over the
/// five m shares, node-shuffled) against either density-matched ER graphs
/// or degree-preserving rewirings.
pub fn build_benchmark(
    kind: BenchmarkKind,
    n: usize,
    count_per_class: usize,
    seed: u64,
) -> Result<Benchmark, GraphGenError> {
    if n < 10 {
        return Err(GraphGenError::GraphTooSmall { n });
    }
    if count_per_class == 0 || count_per_class % 5 != 0 {
        return Err(GraphGenError::BadClassCount {
            count: count_per_class,
        });
    }
    let ms = ba_attachment_counts(n);
    let per_share = count_per_class / 5;
    let mut stream = 0u64;
    let mut next_seed = || {
        let s = child_seed(seed, stream);
        stream += 1;
        s
    };

    let mut reals: Vec<Graph> = Vec::with_capacity(count_per_class);
    for &m in &ms {
        for _ in 0..per_share {
            let ba = gen_ba(n, m, next_seed())?;
            reals.push(permute_nodes(&ba, next_seed()));
        }
    }

    let mut fakes: Vec<Graph> = Vec::with_capacity(count_per_class);
    match kind {
        BenchmarkKind::BaVsEr => {
            // Match expected edge counts share by share: a BA share with
            // attachment m has exactly m*(n-m) edges.
            let pairs = (n * (n - 1) / 2) as f64;
            for &m in &ms {
                let p = (m * (n - m)) as f64 / pairs;
                for _ in 0..per_share {
                    fakes.push(gen_er(n, p.min(1.0), next_seed())?);
                }
            }
        }
        BenchmarkKind::BaVsConfig => {
            for real in &reals {
                fakes.push(rewire_preserving_degrees(real, next_seed()));
            }
        }
    }

    let mut graphs: Vec<LabeledGraph> = Vec::with_capacity(2 * count_per_class);
    graphs.extend(reals.into_iter().map(|graph| LabeledGraph { graph, label: 0 }));
    graphs.extend(fakes.into_iter().map(|graph| LabeledGraph { graph, label: 1 }));
    Ok(Benchmark {
        kind,
        n,
        count_per_class,
        graphs,
    })
}
