//! Undirected simple graphs: construction, random generation, complement,
//! and isomorphism testing (WL hash prefilter + exact backtracking).

use crate::rng::{fnv1a, fnv1a_combine};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("edge ({0}, {1}) is invalid for a simple graph on {2} vertices")]
    BadEdge(usize, usize, usize),
    #[error("edge probability k/n = {k}/{n} produced no connected graph in {attempts} attempts")]
    RejectionBudget { n: usize, k: usize, attempts: usize },
}

/// An undirected simple graph with a stable identifier.
///
/// Edges are stored as sorted `(u, v)` pairs with `u < v`; vertices are
/// `0..n`. Construction validates simplicity, so every held instance is
/// well-formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub id: String,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphInstance {
    pub fn new(id: impl Into<String>, n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooSmall(n));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u == v || v >= n {
                return Err(GraphError::BadEdge(a, b, n));
            }
            set.insert((u, v));
        }
        if set.len() != edges.len() {
            // Duplicate after normalization.
            for &(a, b) in edges {
                let (u, v) = if a < b { (a, b) } else { (b, a) };
                if edges.iter().filter(|&&(x, y)| {
                    let (p, q) = if x < y { (x, y) } else { (y, x) };
                    (p, q) == (u, v)
                }).count() > 1
                {
                    return Err(GraphError::BadEdge(a, b, n));
                }
            }
        }
        Ok(Self { id: id.into(), n, edges: set.into_iter().collect() })
    }

    /// Complete graph on `n` vertices.
    pub fn complete(id: impl Into<String>, n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self::new(id, n, &edges).expect("complete graph is simple")
    }

    /// Path graph 0-1-...-(n-1).
    pub fn path(id: impl Into<String>, n: usize) -> Self {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Self::new(id, n, &edges).expect("path graph is simple")
    }

    /// Cycle graph on `n` vertices.
    pub fn cycle(id: impl Into<String>, n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(id, n, &edges).expect("cycle graph is simple")
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&(a, b)).is_ok()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Complement graph on the same vertex set; `complement(complement(G)) = G`.
    pub fn complement(&self) -> GraphInstance {
        let mut edges = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if !self.has_edge(u, v) {
                    edges.push((u, v));
                }
            }
        }
        GraphInstance {
            id: format!("{}-complement", self.id),
            n: self.n,
            edges,
        }
    }

    /// Relabel vertices by `perm` (vertex `v` becomes `perm[v]`).
    pub fn permuted(&self, perm: &[usize]) -> GraphInstance {
        assert_eq!(perm.len(), self.n);
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        GraphInstance::new(format!("{}-perm", self.id), self.n, &edges).expect("permutation preserves simplicity")
    }
}

/// Candidate G(n, k/n) draw without the connectivity filter.
fn sample_edge_set<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let p = k as f64 / n as f64;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

const REJECTION_BUDGET: usize = 10_000;

/// Random connected graph: each pair is an edge independently with
/// probability `k/n`, resampled until connected.
pub fn generate_random_connected_graph<R: Rng>(
    id: impl Into<String>,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<GraphInstance, GraphError> {
    assert!(n >= 2, "need n >= 2");
    assert!(k >= 1 && k <= n - 1, "need 1 <= k <= n-1");
    let id = id.into();
    for _ in 0..REJECTION_BUDGET {
        let edges = sample_edge_set(n, k, rng);
        let g = GraphInstance { id: id.clone(), n, edges };
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::RejectionBudget { n, k, attempts: REJECTION_BUDGET })
}

/// WL color refinement for `iterations` rounds; returns per-vertex colors
/// of every round (round 0 = degree colors).
pub fn wl_colors(g: &GraphInstance, iterations: usize) -> Vec<Vec<u64>> {
    let adj = g.adjacency();
    let mut colors: Vec<u64> = g.degrees().iter().map(|&d| fnv1a(&(d as u64).to_le_bytes())).collect();
    let mut rounds = vec![colors.clone()];
    for _ in 0..iterations {
        let mut next = Vec::with_capacity(g.n);
        for v in 0..g.n {
            let mut neigh: Vec<u64> = adj[v].iter().map(|&w| colors[w]).collect();
            neigh.sort_unstable();
            let mut h = fnv1a_combine(fnv1a(b"wl"), colors[v]);
            for c in neigh {
                h = fnv1a_combine(h, c);
            }
            next.push(h);
        }
        colors = next;
        rounds.push(colors.clone());
    }
    rounds
}

/// Isomorphism-invariant graph hash (3-round WL). Equal hashes are only a
/// candidate match; confirm with [`are_isomorphic`].
pub fn wl_hash(g: &GraphInstance) -> u64 {
    let rounds = wl_colors(g, 3);
    let mut final_colors = rounds.last().expect("rounds nonempty").clone();
    final_colors.sort_unstable();
    let mut h = fnv1a_combine(fnv1a(b"graph"), g.n as u64);
    h = fnv1a_combine(h, g.num_edges() as u64);
    for c in final_colors {
        h = fnv1a_combine(h, c);
    }
    h
}

/// Exact isomorphism test by backtracking with degree pruning. Intended
/// for the dataset scale (n <= 12).
pub fn are_isomorphic(a: &GraphInstance, b: &GraphInstance) -> bool {
    if a.n != b.n || a.num_edges() != b.num_edges() {
        return false;
    }
    let deg_a = a.degrees();
    let deg_b = b.degrees();
    let mut sorted_a = deg_a.clone();
    let mut sorted_b = deg_b.clone();
    sorted_a.sort_unstable();
    sorted_b.sort_unstable();
    if sorted_a != sorted_b {
        return false;
    }
    // Map high-degree vertices first to prune early.
    let mut order: Vec<usize> = (0..a.n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(deg_a[v]));

    let mut mapping = vec![usize::MAX; a.n];
    let mut used = vec![false; b.n];
    backtrack(a, b, &deg_a, &deg_b, &order, 0, &mut mapping, &mut used)
}

fn backtrack(
    a: &GraphInstance,
    b: &GraphInstance,
    deg_a: &[usize],
    deg_b: &[usize],
    order: &[usize],
    depth: usize,
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for cand in 0..b.n {
        if used[cand] || deg_b[cand] != deg_a[v] {
            continue;
        }
        // Adjacency with already-mapped vertices must agree.
        let consistent = order[..depth].iter().all(|&w| {
            a.has_edge(v, w) == b.has_edge(cand, mapping[w])
        });
        if !consistent {
            continue;
        }
        mapping[v] = cand;
        used[cand] = true;
        if backtrack(a, b, deg_a, deg_b, order, depth + 1, mapping, used) {
            return true;
        }
        mapping[v] = usize::MAX;
        used[cand] = false;
    }
    false
}
