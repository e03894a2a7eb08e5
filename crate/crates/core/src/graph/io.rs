//! Edge-list text format and the dataset manifest.
//!
//! ```text
//! n m
//! u v      (m lines, 0-based endpoints)
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CslSample, Graph, GraphError};

pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or(GraphError::Parse { line: 1, message: "empty input".into() })?;
    let [n, m] = parse_pair(header, line)?;

    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    for (line, body) in lines {
        if edges.len() == m {
            return Err(GraphError::Parse { line, message: format!("more than the declared {m} edges") });
        }
        let [u, v] = parse_pair(body, line)?;
        if u >= n || v >= n {
            return Err(GraphError::Parse {
                line,
                message: format!("endpoint out of range: ({u}, {v}) with {n} nodes"),
            });
        }
        if u == v {
            return Err(GraphError::Parse { line, message: format!("self-loop at node {u}") });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(GraphError::Parse { line, message: format!("duplicate edge ({u}, {v})") });
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: text.lines().count().max(1),
            message: format!("declared {m} edges, found {}", edges.len()),
        });
    }
    Graph::new(n, edges)
}

fn parse_pair(body: &str, line: usize) -> Result<[usize; 2], GraphError> {
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(GraphError::Parse { line, message: format!("expected two integers, got {body:?}") });
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| GraphError::Parse { line, message: format!("not a non-negative integer: {s:?}") })
    };
    Ok([parse(fields[0])?, parse(fields[1])?])
}

/// Canonical text form: header then edges in sorted `u < v` order.
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.num_nodes(), g.num_edges());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| io_err(path, source))?;
    parse_edge_list(&text)
}

pub fn write_graph(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    fs::write(path, to_edge_list(g)).map_err(|source| io_err(path, source))
}

fn io_err(path: &Path, source: std::io::Error) -> GraphError {
    GraphError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub graph_path: String,
    pub label: usize,
    pub class_skip: usize,
}

/// Writes one edge-list file per sample plus `manifest.json` into `dir`.
pub fn write_csl_dataset(dir: impl AsRef<Path>, samples: &[CslSample]) -> Result<Vec<ManifestEntry>, GraphError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
    let mut manifest = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let name = format!("csl_{:03}_skip{}.txt", i, s.skip);
        write_graph(&s.graph, dir.join(&name))?;
        manifest.push(ManifestEntry { graph_path: name, label: s.label, class_skip: s.skip });
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json).map_err(|source| io_err(&path, source))?;
    Ok(manifest)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| io_err(path, source))?;
    Ok(serde_json::from_str(&text)?)
}
