//! Communication graphs, gossip matrices, and a dense symmetric
//! eigensolver (cyclic Jacobi) for the small spectra this crate needs.

use crate::seeds::{self, Domain};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("infeasible degree sequence: n={n}, d={d}")]
    Infeasible { n: usize, d: usize },
    #[error("gave up after {0} rejected attempts")]
    RetriesExhausted(usize),
    #[error("edge probability {0} outside (0, 1)")]
    BadEdgeProbability(f64),
    #[error("matrix not symmetric within {0:e}")]
    NotSymmetric(f64),
    #[error("jacobi sweep limit reached ({0} sweeps)")]
    NoConvergence(usize),
    #[error("matrix too large: n={0} > 256")]
    TooLarge(usize),
    #[error("bad edge list line {line}: {reason}")]
    BadEdgeList { line: usize, reason: String },
}

/// Undirected simple graph; adjacency is symmetric with a zero diagonal,
/// and construction guarantees connectivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

impl Graph {
    fn empty(n: usize) -> Self {
        Self { n, adj: vec![false; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        self.adj[u * self.n + v] = true;
        self.adj[v * self.n + u] = true;
    }

    pub fn degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.has_edge(u, v)).count()
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| self.has_edge(u, v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..self.n {
                if self.has_edge(u, v) && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Hop distances from `source` (BFS); unreachable nodes get `usize::MAX`.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[source] = 0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..self.n {
                if self.has_edge(u, v) && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// One `u v` pair per line, `u < v`, 0-indexed.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.has_edge(u, v) {
                    out.push_str(&format!("{u} {v}\n"));
                }
            }
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Graph, GraphError> {
        let mut edges = Vec::new();
        let mut max_node = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<usize, GraphError> {
                s.and_then(|t| t.parse().ok()).ok_or(GraphError::BadEdgeList {
                    line: lineno + 1,
                    reason: "expected two node ids".into(),
                })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if u == v {
                return Err(GraphError::BadEdgeList { line: lineno + 1, reason: "self-loop".into() });
            }
            max_node = max_node.max(u).max(v);
            edges.push((u, v));
        }
        let mut g = Graph::empty(max_node + 1);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        Ok(g)
    }
}

const MAX_GEN_ATTEMPTS: usize = 1000;

/// Connected `d`-regular simple graph via the pairing model, rejecting
/// draws with multi-edges, self-loops, or disconnected outcomes.
pub fn gen_regular(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    if d >= n || n * d % 2 != 0 || d == 0 {
        return Err(GraphError::Infeasible { n, d });
    }
    let mut rng = seeds::stream(seed, Domain::Topology, &[n as u64, d as u64]);
    'attempt: for _ in 0..MAX_GEN_ATTEMPTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat(u).take(d)).collect();
        stubs.shuffle(&mut rng);
        let mut g = Graph::empty(n);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || g.has_edge(u, v) {
                continue 'attempt;
            }
            g.add_edge(u, v);
        }
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::RetriesExhausted(MAX_GEN_ATTEMPTS))
}

/// Erdős–Rényi–Gilbert graph; each edge present independently with
/// probability `p_edge`, redrawn until connected.
pub fn gen_er(n: usize, p_edge: f64, seed: u64) -> Result<Graph, GraphError> {
    if !(p_edge > 0.0 && p_edge < 1.0) {
        return Err(GraphError::BadEdgeProbability(p_edge));
    }
    let mut rng = seeds::stream(seed, Domain::Topology, &[n as u64, 0xE2]);
    for _ in 0..MAX_GEN_ATTEMPTS {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_range(0.0..1.0) < p_edge {
                    g.add_edge(u, v);
                }
            }
        }
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::RetriesExhausted(MAX_GEN_ATTEMPTS))
}

pub fn gen_complete(n: usize) -> Graph {
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v);
        }
    }
    g
}

/// Row-stochastic gossip weights aligned with a graph.
///
/// Row `i` puts `1/(deg(i)+1)` on itself and on each neighbor; for a
/// `d`-regular graph this equals `(I + A)/(d + 1)`, which is symmetric and
/// doubly stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl GossipMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

pub fn gossip_from_graph(g: &Graph) -> GossipMatrix {
    let n = g.n();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        let w = 1.0 / (g.degree(i) as f64 + 1.0);
        weights[i * n + i] = w;
        for j in 0..n {
            if g.has_edge(i, j) {
                weights[i * n + j] = w;
            }
        }
    }
    GossipMatrix { n, weights }
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as rows. Converges when the largest off-diagonal magnitude
/// drops below `1e-12`.
pub fn symmetric_eigs_full(m: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), GraphError> {
    if n > 256 {
        return Err(GraphError::TooLarge(n));
    }
    assert_eq!(m.len(), n * n, "matrix size");
    let sym_tol = 1e-10;
    for i in 0..n {
        for j in 0..i {
            if (m[i * n + j] - m[j * n + i]).abs() > sym_tol {
                return Err(GraphError::NotSymmetric(sym_tol));
            }
        }
    }
    let mut a = m.to_vec();
    // v starts as identity; accumulates rotations column-wise
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let max_sweeps = 100;
    let tol = 1e-12;
    for _sweep in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a[i * n + j].abs());
            }
        }
        if off < tol {
            let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[i * n + i], i)).collect();
            pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
            let eigvals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mut eigvecs = vec![0.0; n * n];
            for (row, &(_, col)) in pairs.iter().enumerate() {
                for i in 0..n {
                    eigvecs[row * n + i] = v[i * n + col];
                }
            }
            return Ok((eigvals, eigvecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < tol {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(GraphError::NoConvergence(max_sweeps))
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigs(m: &[f64], n: usize) -> Result<Vec<f64>, GraphError> {
    symmetric_eigs_full(m, n).map(|(vals, _)| vals)
}
