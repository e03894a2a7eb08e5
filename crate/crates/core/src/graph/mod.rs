//! Undirected simple graphs, the graph families used throughout the crate,
//! and the edge-list file format.

mod generators;
mod io;
mod matrix;

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use thiserror::Error;

pub use generators::{
    bowtie, complete, cycle, cycle_with_chord, disjoint_union, generate_csl, generate_csl_dataset,
    generate_rook_4x4, generate_shrikhande, path, random_gnm, random_permutation, star, CslSample,
    CSL_SKIPS,
};
pub use io::{
    parse_edge_list, read_graph, read_manifest, to_edge_list, write_csl_dataset, write_graph,
    ManifestEntry,
};
pub use matrix::BinaryMatrix;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) references a node outside 0..{num_nodes}")]
    EndpointOutOfRange { u: usize, v: usize, num_nodes: usize },
    #[error("feature matrix holds {got} values, expected {expected}")]
    FeatureShape { got: usize, expected: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

/// Row-major `num_nodes × dim` real feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeFeatures {
    dim: usize,
    data: Vec<f64>,
}

impl NodeFeatures {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(
            dim == 0 && data.is_empty() || dim > 0 && data.len().is_multiple_of(dim),
            "feature data length {} is not a multiple of dim {dim}",
            data.len()
        );
        Self { dim, data }
    }

    pub fn constant(num_nodes: usize, dim: usize, value: f64) -> Self {
        Self { dim, data: vec![value; num_nodes * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.data[node * self.dim..(node + 1) * self.dim]
    }

    fn num_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }
}

/// Per-node degrees. The sum is always twice the edge count.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DegreeSequence(pub Vec<usize>);

impl DegreeSequence {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Degrees as a sorted multiset, for comparing graphs up to relabeling.
    pub fn sorted(&self) -> Vec<usize> {
        let mut d = self.0.clone();
        d.sort_unstable();
        d
    }

    pub fn is_regular(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }
}

/// Immutable undirected simple graph on nodes `0..num_nodes`.
///
/// Edges are stored canonically as `(u, v)` with `u < v`, sorted
/// lexicographically, so two graphs with the same edge set compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    node_features: Option<NodeFeatures>,
}

impl Graph {
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(GraphError::EndpointOutOfRange { u, v, num_nodes });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in &canon {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { num_nodes, edges: canon, neighbors, node_features: None })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: Vec::new(),
            neighbors: vec![Vec::new(); num_nodes],
            node_features: None,
        }
    }

    pub fn with_features(mut self, features: NodeFeatures) -> Result<Self, GraphError> {
        if features.num_rows() != self.num_nodes {
            return Err(GraphError::FeatureShape {
                got: features.data.len(),
                expected: self.num_nodes * features.dim,
            });
        }
        self.node_features = Some(features);
        Ok(self)
    }

    pub fn without_features(mut self) -> Self {
        self.node_features = None;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn node_features(&self) -> Option<&NodeFeatures> {
        self.node_features.as_ref()
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence(self.neighbors.iter().map(Vec::len).collect())
    }

    pub fn adjacency_matrix(&self) -> BinaryMatrix {
        let mut m = BinaryMatrix::zeros(self.num_nodes);
        for &(u, v) in &self.edges {
            m.set(u, v, true);
            m.set(v, u, true);
        }
        m
    }

    /// Connected-component label per node (labels in order of lowest node).
    pub fn component_labels(&self) -> (usize, Vec<usize>) {
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.num_nodes {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &w in &self.neighbors[u] {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    pub fn num_components(&self) -> usize {
        self.component_labels().0
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }

    pub fn is_bipartite(&self) -> bool {
        let mut side = vec![u8::MAX; self.num_nodes];
        let mut queue = VecDeque::new();
        for start in 0..self.num_nodes {
            if side[start] != u8::MAX {
                continue;
            }
            side[start] = 0;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &w in &self.neighbors[u] {
                    if side[w] == u8::MAX {
                        side[w] = 1 - side[u];
                        queue.push_back(w);
                    } else if side[w] == side[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]` of the result.
    /// Feature rows move with their nodes.
    pub fn permute(&self, perm: &[usize]) -> Result<Self, GraphError> {
        check_permutation(perm, self.num_nodes)?;
        let mut g = Graph::new(self.num_nodes, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))?;
        if let Some(f) = &self.node_features {
            let mut data = vec![0.0; f.data.len()];
            for (i, &p) in perm.iter().enumerate() {
                data[p * f.dim..(p + 1) * f.dim].copy_from_slice(f.row(i));
            }
            g.node_features = Some(NodeFeatures::new(f.dim, data));
        }
        Ok(g)
    }

    /// Stable identifier derived from the node count and canonical edge list.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.num_nodes.hash(&mut h);
        self.edges.hash(&mut h);
        h.finish()
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<(), GraphError> {
    if perm.len() != n {
        return Err(GraphError::Parameter(format!(
            "permutation has length {}, graph has {n} nodes",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(GraphError::Parameter(format!("not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_adjacency() {
        let g = complete(3);
        let a = g.adjacency_matrix();
        let rows: Vec<Vec<u8>> = (0..3).map(|i| (0..3).map(|j| a.get(i, j) as u8).collect()).collect();
        assert_eq!(rows, vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
    }

    #[test]
    fn edgeless_adjacency_is_zero() {
        let a = Graph::empty(2).adjacency_matrix();
        assert_eq!(a.count_ones(), 0);
        assert_eq!(a.size(), 2);
    }

    #[test]
    fn csl_rows_sum_to_four() {
        let a = generate_csl(41, 2).unwrap().adjacency_matrix();
        assert!(a.row_sums().iter().all(|&s| s == 4));
        assert!(a.is_symmetric());
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(matches!(Graph::new(2, [(0, 0)]), Err(GraphError::SelfLoop(0))));
        assert!(matches!(Graph::new(3, [(0, 1), (1, 0)]), Err(GraphError::DuplicateEdge(0, 1))));
        assert!(matches!(Graph::new(2, [(0, 2)]), Err(GraphError::EndpointOutOfRange { .. })));
    }

    #[test]
    fn edges_are_canonical() {
        let g = Graph::new(4, [(3, 1), (2, 0), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 3)]);
        assert_eq!(g, Graph::new(4, [(0, 1), (1, 3), (0, 2)]).unwrap());
    }

    #[test]
    fn components_and_bipartite() {
        let g = disjoint_union(&complete(3), &complete(3));
        assert_eq!(g.num_components(), 2);
        assert!(!g.is_bipartite());
        assert!(cycle(4).is_bipartite());
        assert!(!cycle(5).is_bipartite());
    }

    #[test]
    fn permute_moves_features() {
        let g = path(3)
            .with_features(NodeFeatures::new(1, vec![10.0, 20.0, 30.0]))
            .unwrap();
        let p = g.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.node_features().unwrap().data(), &[20.0, 30.0, 10.0]);
        assert!(p.has_edge(2, 0) && p.has_edge(0, 1));
        assert!(g.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn feature_shape_checked() {
        assert!(path(3).with_features(NodeFeatures::new(2, vec![0.0; 4])).is_err());
    }
}
