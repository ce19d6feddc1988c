//! Simple undirected graphs over contiguous node ids.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Immutable simple undirected graph in compressed adjacency form.
///
/// Node ids are `0..node_count`. Every edge is stored once in `edges` as
/// `(u, v)` with `u < v`, sorted; adjacency lists are sorted ascending and
/// carry, per slot, the id of the edge they traverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    slot_edge: Vec<u32>,
    edges: Vec<(u32, u32)>,
    original_ids: Vec<i64>,
    self_loops_dropped: usize,
}

impl Graph {
    /// Builds a graph from `node_count` nodes and arbitrary undirected pairs.
    /// Self-loops are dropped and duplicates (in either orientation) collapsed.
    pub fn from_edges(node_count: usize, pairs: &[(usize, usize)]) -> Result<Graph> {
        let mut edges = Vec::with_capacity(pairs.len());
        let mut loops = 0;
        for &(a, b) in pairs {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidArgument(alloc::format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if a == b {
                loops += 1;
                continue;
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            edges.push((u as u32, v as u32));
        }
        let ids = (0..node_count as i64).collect();
        Ok(Self::assemble(node_count, edges, ids, loops))
    }

    fn assemble(
        node_count: usize,
        mut edges: Vec<(u32, u32)>,
        original_ids: Vec<i64>,
        self_loops_dropped: usize,
    ) -> Graph {
        edges.sort_unstable();
        edges.dedup();
        let mut deg = vec![0usize; node_count];
        for &(u, v) in &edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = vec![0usize; node_count + 1];
        for i in 0..node_count {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; offsets[node_count]];
        let mut slot_edge = vec![0u32; offsets[node_count]];
        // edges are sorted, so each u's larger neighbors arrive in order; the
        // smaller neighbors of v also arrive in ascending u order.
        for (e, &(u, v)) in edges.iter().enumerate() {
            let (u, v) = (u as usize, v as usize);
            neighbors[fill[u]] = v as u32;
            slot_edge[fill[u]] = e as u32;
            fill[u] += 1;
            neighbors[fill[v]] = u as u32;
            slot_edge[fill[v]] = e as u32;
            fill[v] += 1;
        }
        for u in 0..node_count {
            let (s, t) = (offsets[u], offsets[u + 1]);
            let mut pairs: Vec<(u32, u32)> =
                neighbors[s..t].iter().copied().zip(slot_edge[s..t].iter().copied()).collect();
            pairs.sort_unstable();
            for (k, (n, e)) in pairs.into_iter().enumerate() {
                neighbors[s + k] = n;
                slot_edge[s + k] = e;
            }
        }
        Graph { offsets, neighbors, slot_edge, edges, original_ids, self_loops_dropped }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbor list of `u`.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Edge ids aligned with [`Graph::neighbors`].
    #[inline]
    pub fn incident_edges(&self, u: usize) -> &[u32] {
        &self.slot_edge[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn node_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Canonical edge list, `u < v`, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Input id of each node, in first-appearance order.
    pub fn original_ids(&self) -> &[i64] {
        &self.original_ids
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Degree of every node.
    pub fn degree(&self) -> Vec<usize> {
        (0..self.node_count()).map(|u| self.node_degree(u)).collect()
    }

    /// Relabels nodes: node `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(Error::Dimension("permutation length".to_string()));
        }
        let pairs: Vec<(usize, usize)> =
            self.edges.iter().map(|&(u, v)| (perm[u as usize], perm[v as usize])).collect();
        Graph::from_edges(n, &pairs)
    }

    /// Serializes as edge-list text, one `u v` pair per line. Isolated nodes
    /// cannot be expressed in this format and are lost.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 12);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Parses whitespace-separated edge-list text.
///
/// Lines starting with `#` and blank lines are skipped. Each remaining line
/// holds two integer node ids and an optional numeric weight, which is
/// ignored. Arcs are symmetrized, self-loops dropped (but their endpoint kept
/// as a node), duplicates collapsed, and ids remapped to `0..n` in order of
/// first appearance.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut remap: BTreeMap<i64, u32> = BTreeMap::new();
    let mut original = Vec::new();
    let mut edges = Vec::new();
    let mut loops = 0usize;
    let mut intern = |id: i64, original: &mut Vec<i64>| -> u32 {
        *remap.entry(id).or_insert_with(|| {
            original.push(id);
            (original.len() - 1) as u32
        })
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: alloc::format!("expected 2 or 3 tokens, found {}", toks.len()),
            });
        }
        let parse_id = |t: &str| {
            t.parse::<i64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: alloc::format!("`{t}` is not an integer node id"),
            })
        };
        let a = parse_id(toks[0])?;
        let b = parse_id(toks[1])?;
        if let Some(w) = toks.get(2) {
            if w.parse::<f64>().is_err() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: alloc::format!("`{w}` is not a numeric weight"),
                });
            }
        }
        let u = intern(a, &mut original);
        let v = intern(b, &mut original);
        if u == v {
            loops += 1;
            continue;
        }
        edges.push(if u < v { (u, v) } else { (v, u) });
    }
    if original.is_empty() {
        return Err(Error::EmptyGraph);
    }
    Ok(Graph::assemble(original.len(), edges, original, loops))
}

/// Node degrees; convenience free function mirroring [`Graph::degree`].
pub fn degree(g: &Graph) -> Vec<usize> {
    g.degree()
}
