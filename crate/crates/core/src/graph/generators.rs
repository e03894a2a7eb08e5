use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, NodeFeatures};

/// Skip lengths of the ten circular-skip-link classes.
pub const CSL_SKIPS: [usize; 10] = [2, 3, 4, 5, 6, 9, 11, 12, 13, 16];

/// Circular skip link graph: a ring on `num_nodes` nodes plus chords
/// `i - i+skip (mod n)`. Every node has degree 4.
pub fn generate_csl(num_nodes: usize, skip: usize) -> Result<Graph, GraphError> {
    if skip < 2 || 2 * skip >= num_nodes {
        return Err(GraphError::Parameter(format!(
            "skip length {skip} must satisfy 2 <= skip < {num_nodes}/2"
        )));
    }
    let n = num_nodes;
    let edges = (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + skip) % n)]);
    Graph::new(n, edges)
}

/// The 4×4 rook's graph: node `4i + j` is square `(i, j)`; two squares are
/// adjacent iff they share a row or a column.
pub fn generate_rook_4x4() -> Graph {
    let mut edges = Vec::new();
    for a in 0..16 {
        for b in a + 1..16 {
            if a / 4 == b / 4 || a % 4 == b % 4 {
                edges.push((a, b));
            }
        }
    }
    Graph::new(16, edges).expect("rook graph is simple")
}

/// The Shrikhande graph as the Cayley graph of Z4×Z4 with connection set
/// `{±(1,0), ±(0,1), ±(1,1)}`. Node `4i + j` is `(i, j)`.
pub fn generate_shrikhande() -> Graph {
    let mut edges = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                edges.push((4 * i + j, 4 * ((i + di) % 4) + (j + dj) % 4));
            }
        }
    }
    Graph::new(16, edges).expect("shrikhande graph is simple")
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 nodes");
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
}

pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
}

pub fn complete(n: usize) -> Graph {
    Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).expect("complete graph is simple")
}

/// Star with one center (node 0) and `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    Graph::new(leaves + 1, (1..=leaves).map(|v| (0, v))).expect("star is simple")
}

/// Two triangles sharing node 0.
pub fn bowtie() -> Graph {
    Graph::new(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).expect("bowtie is simple")
}

/// `C_n` plus the chord `0-2`.
pub fn cycle_with_chord(n: usize) -> Graph {
    assert!(n >= 4, "chord needs a cycle of at least 4 nodes");
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).chain([(0, 2)])).expect("chorded cycle is simple")
}

/// Disjoint union; nodes of `h` are shifted by `g.num_nodes()`. Features are dropped.
pub fn disjoint_union(g: &Graph, h: &Graph) -> Graph {
    let off = g.num_nodes();
    Graph::new(
        off + h.num_nodes(),
        g.edges().iter().copied().chain(h.edges().iter().map(|&(u, v)| (u + off, v + off))),
    )
    .expect("union of simple graphs is simple")
}

/// Uniform random graph with exactly `num_edges` edges.
pub fn random_gnm<R: Rng + ?Sized>(num_nodes: usize, num_edges: usize, rng: &mut R) -> Graph {
    let mut all: Vec<(usize, usize)> =
        (0..num_nodes).flat_map(|u| (u + 1..num_nodes).map(move |v| (u, v))).collect();
    assert!(num_edges <= all.len(), "too many edges for {num_nodes} nodes");
    all.shuffle(rng);
    all.truncate(num_edges);
    Graph::new(num_nodes, all).expect("sampled edges are distinct")
}

pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// One labeled member of the CSL dataset.
#[derive(Clone, Debug)]
pub struct CslSample {
    pub graph: Graph,
    /// Index of `skip` in the requested skip list.
    pub label: usize,
    pub skip: usize,
    /// Node `i` of the class representative is node `permutation[i]` here.
    pub permutation: Vec<usize>,
}

/// Labeled CSL graphs: `copies_per_class` node-permuted copies of each
/// `generate_csl(num_nodes, skip)`, all carrying the constant feature 1.0.
pub fn generate_csl_dataset(
    num_nodes: usize,
    skips: &[usize],
    copies_per_class: usize,
    seed: u64,
) -> Result<Vec<CslSample>, GraphError> {
    let mut sorted = skips.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(GraphError::Parameter("skip lengths must be distinct".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(skips.len() * copies_per_class);
    for (label, &skip) in skips.iter().enumerate() {
        let rep = generate_csl(num_nodes, skip)?
            .with_features(NodeFeatures::constant(num_nodes, 1, 1.0))?;
        for _ in 0..copies_per_class {
            let permutation = random_permutation(num_nodes, &mut rng);
            let graph = rep.permute(&permutation)?;
            out.push(CslSample { graph, label, skip, permutation });
        }
    }
    Ok(out)
}
