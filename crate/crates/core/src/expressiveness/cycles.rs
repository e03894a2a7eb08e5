//! Chordless (induced) cycle enumeration.

use std::collections::BTreeMap;

use crate::graph::Graph;

/// All chordless cycles with at most `max_len` nodes.
///
/// Each cycle is reported once, in canonical form: it starts at its
/// smallest node and its second node is smaller than its last.
pub fn chordless_cycles(g: &Graph, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    for s in 0..g.num_nodes() {
        path.clear();
        path.push(s);
        extend(g, max_len, &mut path, &mut out);
    }
    out
}

fn extend(g: &Graph, max_len: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let s = path[0];
    let last = *path.last().expect("non-empty path");
    let k = path.len();
    for &w in g.neighbors(last) {
        if w <= s || path.contains(&w) {
            continue;
        }
        // w may only touch `last` and, to close the cycle, `s`.
        if k >= 2 && path[1..k - 1].iter().any(|&p| g.has_edge(p, w)) {
            continue;
        }
        let closes = k >= 2 && g.has_edge(s, w);
        if closes {
            if path[1] < w && k < max_len {
                let mut c = path.clone();
                c.push(w);
                out.push(c);
            }
            continue;
        }
        if k + 1 < max_len {
            path.push(w);
            extend(g, max_len, path, out);
            path.pop();
        }
    }
}

/// length → number of chordless cycles of that length.
pub fn chordless_profile(g: &Graph, max_len: usize) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for c in chordless_cycles(g, max_len) {
        *h.entry(c.len()).or_insert(0) += 1;
    }
    h
}
