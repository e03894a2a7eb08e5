//! Cycle-space machinery: fundamental cycle bases, clique adjacency
//! matrices, the Euler identity and biconnectivity.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::graph::{BinaryMatrix, Graph, GraphError, NodeFeatures};

/// A set of cycles whose edge sets form a basis of the cycle space.
///
/// Each cycle lists its nodes in walk order; consecutive nodes (and the
/// last and first) are adjacent in the parent graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleBasis {
    pub cycles: Vec<Vec<usize>>,
    pub parent_graph_id: u64,
}

impl CycleBasis {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Fundamental cycles of a BFS spanning forest (Paton's construction).
///
/// Each component is rooted at its lowest-index node, neighbors are visited
/// in increasing order, and non-tree edges are closed in canonical edge
/// order. The result is deterministic for a given labeling, but different
/// labelings of the same graph can give different bases.
pub fn cycle_basis(g: &Graph) -> CycleBasis {
    let n = g.num_nodes();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    depth[w] = depth[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    let is_tree_edge = |u: usize, v: usize| parent[u] == v || parent[v] == u;
    let mut cycles = Vec::new();
    for &(u, v) in g.edges() {
        if is_tree_edge(u, v) {
            continue;
        }
        // Walk both endpoints up to their lowest common ancestor.
        let (mut a, mut b) = (u, v);
        let mut left = vec![a];
        let mut right = vec![b];
        while depth[a] > depth[b] {
            a = parent[a];
            left.push(a);
        }
        while depth[b] > depth[a] {
            b = parent[b];
            right.push(b);
        }
        while a != b {
            a = parent[a];
            b = parent[b];
            left.push(a);
            right.push(b);
        }
        right.pop();
        left.extend(right.into_iter().rev());
        cycles.push(left);
    }
    CycleBasis { cycles, parent_graph_id: g.fingerprint() }
}

/// Clique adjacency matrix: `(u, v)` is set iff `u != v` lie on a common
/// basis cycle. With `max_cycle_len`, only cycles of at most that many
/// nodes contribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueAdjacency {
    pub matrix: BinaryMatrix,
}

pub fn clique_adjacency(basis: &CycleBasis, num_nodes: usize, max_cycle_len: Option<usize>) -> CliqueAdjacency {
    let mut matrix = BinaryMatrix::zeros(num_nodes);
    for cyc in &basis.cycles {
        if max_cycle_len.is_some_and(|max| cyc.len() > max) {
            continue;
        }
        for (i, &u) in cyc.iter().enumerate() {
            assert!(u < num_nodes, "basis node {u} outside 0..{num_nodes}");
            for &v in &cyc[i + 1..] {
                matrix.set(u, v, true);
                matrix.set(v, u, true);
            }
        }
    }
    CliqueAdjacency { matrix }
}

/// Convenience: clique adjacency of `g`'s own cycle basis.
pub fn graph_clique_adjacency(g: &Graph, max_cycle_len: Option<usize>) -> CliqueAdjacency {
    clique_adjacency(&cycle_basis(g), g.num_nodes(), max_cycle_len)
}

/// `|E| − |V| + components`, the dimension of the cycle space.
pub fn euler_invariant(g: &Graph) -> usize {
    g.num_edges() + g.num_components() - g.num_nodes()
}

pub fn cycle_length_histogram(basis: &CycleBasis) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for c in &basis.cycles {
        *hist.entry(c.len()).or_insert(0) += 1;
    }
    hist
}

struct LowLink {
    articulation: Vec<bool>,
    bridges: Vec<(usize, usize)>,
}

/// Iterative DFS computing discovery times and low-links.
fn low_link(g: &Graph) -> LowLink {
    let n = g.num_nodes();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut articulation = vec![false; n];
    let mut bridges = Vec::new();
    let mut timer = 0;

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut root_children = 0;
        // (node, parent, next neighbor index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (u, p) = (top.0, top.1);
            if let Some(&w) = g.neighbors(u).get(top.2) {
                top.2 += 1;
                if w == p {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    if u == root {
                        root_children += 1;
                    }
                    stack.push((w, u, 0));
                } else {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if p != usize::MAX {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        bridges.push((p.min(u), p.max(u)));
                    }
                    if p != root && low[u] >= disc[p] {
                        articulation[p] = true;
                    }
                }
            }
        }
        if root_children > 1 {
            articulation[root] = true;
        }
    }
    bridges.sort_unstable();
    LowLink { articulation, bridges }
}

/// Nodes whose removal increases the number of connected components, sorted.
pub fn articulation_vertices(g: &Graph) -> Vec<usize> {
    low_link(g)
        .articulation
        .iter()
        .enumerate()
        .filter_map(|(v, &a)| a.then_some(v))
        .collect()
}

/// Edges whose removal increases the number of connected components, canonical order.
pub fn bridges(g: &Graph) -> Vec<(usize, usize)> {
    low_link(g).bridges
}

/// Induced subgraph on all nodes except `v`; nodes above `v` shift down by one.
pub fn delete_vertex(g: &Graph, v: usize) -> Result<Graph, GraphError> {
    if v >= g.num_nodes() {
        return Err(GraphError::Parameter(format!("no vertex {v} in a graph with {} nodes", g.num_nodes())));
    }
    let reindex = |u: usize| if u > v { u - 1 } else { u };
    let edges = g
        .edges()
        .iter()
        .filter(|&&(a, b)| a != v && b != v)
        .map(|&(a, b)| (reindex(a), reindex(b)));
    let out = Graph::new(g.num_nodes() - 1, edges)?;
    match g.node_features() {
        Some(f) => {
            let data = (0..g.num_nodes()).filter(|&u| u != v).flat_map(|u| f.row(u).to_vec()).collect();
            out.with_features(NodeFeatures::new(f.dim(), data))
        }
        None => Ok(out),
    }
}

/// Same node set without edge `{u, v}`.
pub fn delete_edge(g: &Graph, (u, v): (usize, usize)) -> Result<Graph, GraphError> {
    if !g.has_edge(u, v) {
        return Err(GraphError::Parameter(format!("no edge ({u}, {v})")));
    }
    let key = (u.min(v), u.max(v));
    let out = Graph::new(g.num_nodes(), g.edges().iter().copied().filter(|&e| e != key))?;
    match g.node_features() {
        Some(f) => out.with_features(f.clone()),
        None => Ok(out),
    }
}

/// Structural summary emitted by the `analyze` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopologyReport {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub euler_invariant: usize,
    pub cycle_basis_size: usize,
    pub cycle_length_histogram: BTreeMap<usize, usize>,
    pub articulation_vertices: Vec<usize>,
    pub bridges: Vec<(usize, usize)>,
}

pub fn analyze(g: &Graph) -> TopologyReport {
    let basis = cycle_basis(g);
    let ll = low_link(g);
    TopologyReport {
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        components: g.num_components(),
        euler_invariant: euler_invariant(g),
        cycle_basis_size: basis.len(),
        cycle_length_histogram: cycle_length_histogram(&basis),
        articulation_vertices: ll.articulation.iter().enumerate().filter_map(|(v, &a)| a.then_some(v)).collect(),
        bridges: ll.bridges,
    }
}
