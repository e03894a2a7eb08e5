//! Color refinement on nodes (1-WL, optionally over several relations) and
//! on node pairs (2-folklore WL, as strong as 3-WL).
//!
//! Colors are compressed by sorting the distinct refinement signatures, so
//! ids never depend on node labels. When graphs are compared they are
//! refined in lockstep against one shared signature table, which makes their
//! histograms directly comparable.

use std::collections::BTreeMap;

use crate::graph::Graph;
use crate::topology::graph_clique_adjacency;

use super::ExpressivenessError;

/// Largest graph accepted by the pair-coloring test.
pub const WL3_MAX_NODES: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorRefinement {
    pub colors: Vec<usize>,
    /// Number of rounds that strictly refined the partition.
    pub rounds_to_stabilize: usize,
    /// color → number of nodes.
    pub stable_histogram: BTreeMap<usize, usize>,
}

/// Per-node neighbor lists, one list per relation.
struct Structure {
    relations: Vec<Vec<Vec<usize>>>,
    colors: Vec<usize>,
}

fn histogram(colors: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &c in colors {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

fn compress<K: Ord + Clone>(keys: &[Vec<K>]) -> Vec<Vec<usize>> {
    let table: BTreeMap<K, usize> = {
        let mut all: Vec<K> = keys.iter().flatten().cloned().collect();
        all.sort();
        all.dedup();
        all.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    keys.iter().map(|ks| ks.iter().map(|k| table[k]).collect()).collect()
}

fn distinct(colors: &[Vec<usize>]) -> usize {
    let mut all: Vec<usize> = colors.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// Refines all structures jointly until the shared partition is stable.
fn refine_jointly(structures: &mut [Structure]) -> usize {
    let mut colors: Vec<Vec<usize>> = compress(&structures.iter().map(|s| s.colors.clone()).collect::<Vec<_>>());
    let mut classes = distinct(&colors);
    let mut rounds = 0;
    loop {
        let signatures: Vec<Vec<Vec<usize>>> = structures
            .iter()
            .zip(&colors)
            .map(|(s, cs)| {
                (0..cs.len())
                    .map(|v| {
                        let mut sig = vec![cs[v]];
                        for rel in &s.relations {
                            let mut nb: Vec<usize> = rel[v].iter().map(|&u| cs[u]).collect();
                            nb.sort_unstable();
                            // Separator keeps relations apart in the flat signature.
                            sig.push(usize::MAX);
                            sig.extend(nb);
                        }
                        sig
                    })
                    .collect()
            })
            .collect();
        let next = compress(&signatures);
        let next_classes = distinct(&next);
        if next_classes == classes {
            break;
        }
        colors = next;
        classes = next_classes;
        rounds += 1;
    }
    for (s, cs) in structures.iter_mut().zip(colors) {
        s.colors = cs;
    }
    rounds
}

fn plain_structure(g: &Graph, initial: Option<&[usize]>) -> Structure {
    let n = g.num_nodes();
    Structure {
        relations: vec![(0..n).map(|v| g.neighbors(v).to_vec()).collect()],
        colors: initial.map_or_else(|| vec![0; n], <[usize]>::to_vec),
    }
}

fn augmented_structure(g: &Graph) -> Structure {
    let n = g.num_nodes();
    let ac = graph_clique_adjacency(g, None).matrix;
    Structure {
        relations: vec![
            (0..n).map(|v| g.neighbors(v).to_vec()).collect(),
            (0..n).map(|v| ac.neighbors(v)).collect(),
        ],
        colors: vec![0; n],
    }
}

fn finish(mut structures: Vec<Structure>) -> ColorRefinement {
    let rounds = refine_jointly(&mut structures);
    let colors = structures.pop().expect("one structure").colors;
    ColorRefinement { stable_histogram: histogram(&colors), colors, rounds_to_stabilize: rounds }
}

/// Plain 1-WL color refinement, optionally seeded with initial colors.
pub fn wl1_refine(g: &Graph, initial_colors: Option<&[usize]>) -> ColorRefinement {
    if let Some(c) = initial_colors {
        assert_eq!(c.len(), g.num_nodes(), "one initial color per node");
    }
    finish(vec![plain_structure(g, initial_colors)])
}

/// 1-WL where each node also aggregates its clique-adjacency neighbors; the
/// two neighbor multisets are hashed jointly.
pub fn wl1_with_clique_augmentation(g: &Graph) -> ColorRefinement {
    finish(vec![augmented_structure(g)])
}

fn jointly_distinct(mut pair: Vec<Structure>) -> bool {
    if pair[0].colors.len() != pair[1].colors.len() {
        return true;
    }
    refine_jointly(&mut pair);
    histogram(&pair[0].colors) != histogram(&pair[1].colors)
}

pub fn wl1_distinguishes(g: &Graph, h: &Graph) -> bool {
    jointly_distinct(vec![plain_structure(g, None), plain_structure(h, None)])
}

pub fn augmented_wl1_distinguishes(g: &Graph, h: &Graph) -> bool {
    jointly_distinct(vec![augmented_structure(g), augmented_structure(h)])
}

/// 2-folklore Weisfeiler-Lehman over ordered node pairs. A pair `(u, v)` is
/// refined by the multiset over all `w` of `(c(u, w), c(w, v))`, i.e. by the
/// colored triangles through it. Equivalent in power to 3-WL.
pub fn wl3_distinguishes(g: &Graph, h: &Graph) -> Result<bool, ExpressivenessError> {
    for x in [g, h] {
        if x.num_nodes() > WL3_MAX_NODES {
            return Err(ExpressivenessError::Capability(format!(
                "3-WL limited to {WL3_MAX_NODES} nodes, got {}",
                x.num_nodes()
            )));
        }
    }
    if g.num_nodes() != h.num_nodes() {
        return Ok(true);
    }
    let n = g.num_nodes();
    let atomic = |x: &Graph| -> Vec<usize> {
        (0..n * n)
            .map(|i| {
                let (u, v) = (i / n, i % n);
                if u == v {
                    0
                } else if x.has_edge(u, v) {
                    1
                } else {
                    2
                }
            })
            .collect()
    };
    let mut colors = vec![atomic(g), atomic(h)];
    let mut classes = distinct(&colors);
    loop {
        let signatures: Vec<Vec<Vec<usize>>> = colors
            .iter()
            .map(|cs| {
                (0..n * n)
                    .map(|i| {
                        let (u, v) = (i / n, i % n);
                        let mut triangles: Vec<usize> = (0..n)
                            .map(|w| cs[u * n + w] * (n * n * 2) + cs[w * n + v])
                            .collect();
                        triangles.sort_unstable();
                        let mut sig = Vec::with_capacity(n + 1);
                        sig.push(cs[i]);
                        sig.extend(triangles);
                        sig
                    })
                    .collect()
            })
            .collect();
        let next = compress(&signatures);
        let next_classes = distinct(&next);
        colors = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    Ok(histogram(&colors[0]) != histogram(&colors[1]))
}
