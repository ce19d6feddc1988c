//! The graph/model similarity network.
//!
//! Two node types (graphs and models) joined by five directed relations, each
//! a top-k cosine nearest-neighbor graph over one kind of node feature:
//!
//! | relation | source → target | similarity of            |
//! |----------|-----------------|--------------------------|
//! | `M-g2g`  | graph → graph   | meta-graph features      |
//! | `P-g2g`  | graph → graph   | estimated graph factors  |
//! | `P-m2m`  | model → model   | model factors            |
//! | `P-g2m`  | graph → model   | graph factor · model factor |
//! | `P-m2g`  | model → graph   | the same, from the model side |
//!
//! Node indices in an [`Edge`] are local to the node type implied by the
//! relation. Ties in similarity go to the lower index.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{arg_err, dim_err, Result};
use crate::linalg::{cosine, dot, norm, Matrix};

/// Default neighbors per node and relation.
pub const DEFAULT_TOP_K: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NodeType {
    Graph,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Relation {
    MetaG2G,
    PerfG2G,
    PerfM2M,
    PerfG2M,
    PerfM2G,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::MetaG2G,
        Relation::PerfG2G,
        Relation::PerfM2M,
        Relation::PerfG2M,
        Relation::PerfM2G,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::MetaG2G => "M-g2g",
            Relation::PerfG2G => "P-g2g",
            Relation::PerfM2M => "P-m2m",
            Relation::PerfG2M => "P-g2m",
            Relation::PerfM2G => "P-m2g",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn source_type(self) -> NodeType {
        match self {
            Relation::MetaG2G | Relation::PerfG2G | Relation::PerfG2M => NodeType::Graph,
            Relation::PerfM2M | Relation::PerfM2G => NodeType::Model,
        }
    }

    pub fn target_type(self) -> NodeType {
        match self {
            Relation::MetaG2G | Relation::PerfG2G | Relation::PerfM2G => NodeType::Graph,
            Relation::PerfM2M | Relation::PerfG2M => NodeType::Model,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GmNetwork {
    /// Similarity features of graph nodes for `M-g2g`, one row per graph.
    pub meta: Matrix,
    /// Estimated graph factors, one row per graph.
    pub u_hat: Matrix,
    /// Model factors, one row per model.
    pub v: Matrix,
    pub top_k: usize,
    pub edges: Vec<Edge>,
}

impl GmNetwork {
    pub fn n_graphs(&self) -> usize {
        self.u_hat.rows()
    }

    pub fn n_models(&self) -> usize {
        self.v.rows()
    }

    pub fn edges_of(&self, rel: Relation) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.relation == rel)
    }

    fn type_count(&self, t: NodeType) -> usize {
        match t {
            NodeType::Graph => self.n_graphs(),
            NodeType::Model => self.n_models(),
        }
    }

    /// Checks that every edge's endpoints exist for the relation's node types
    /// and that no edge is a self-loop.
    pub fn validate(&self) -> Result<()> {
        for e in &self.edges {
            let (s, t) = (e.relation.source_type(), e.relation.target_type());
            if e.src >= self.type_count(s) || e.dst >= self.type_count(t) {
                return Err(dim_err(format!("edge {e:?} out of range")));
            }
            if s == t && e.src == e.dst {
                return Err(arg_err(format!("self-loop {e:?}")));
            }
        }
        Ok(())
    }

    /// Largest number of out-edges any node has in one relation.
    pub fn max_out_degree(&self) -> usize {
        let mut counts = alloc::collections::BTreeMap::new();
        for e in &self.edges {
            *counts.entry((e.relation, e.src)).or_insert(0usize) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    /// Relation-tagged edge list, one `src dst relation` line per edge, with
    /// graph nodes written `g<i>` and model nodes `m<j>`.
    pub fn dump(&self) -> String {
        let tag = |t: NodeType| if t == NodeType::Graph { 'g' } else { 'm' };
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{}{} {}{} {}",
                tag(e.relation.source_type()),
                e.src,
                tag(e.relation.target_type()),
                e.dst,
                e.relation.name()
            );
        }
        out
    }
}

fn similarities(query: &[f64], candidates: &Matrix, norms: &[f64]) -> Vec<f64> {
    let qn = norm(query);
    (0..candidates.rows())
        .map(|c| {
            if qn == 0.0 || norms[c] == 0.0 {
                0.0
            } else {
                dot(query, candidates.row(c)) / (qn * norms[c])
            }
        })
        .collect()
}

fn row_norms(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|i| norm(m.row(i))).collect()
}

fn top_indices(sims: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sims.len()).filter(|&c| Some(c) != exclude).collect();
    idx.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Indices of the `k` candidates with highest cosine similarity to `query`,
/// best first, ties to the lower index. `exclude` removes one candidate (the
/// query itself when searching within its own set).
pub fn cosine_topk(query: &[f64], candidates: &Matrix, k: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
    if query.is_empty() {
        return Err(dim_err("zero-length query vector"));
    }
    if candidates.rows() > 0 && candidates.cols() != query.len() {
        return Err(dim_err(format!(
            "query of length {} against candidates of length {}",
            query.len(),
            candidates.cols()
        )));
    }
    if k == 0 {
        return Err(arg_err("k must be at least 1"));
    }
    Ok(top_indices(&similarities(query, candidates, &row_norms(candidates)), k, exclude))
}

fn knn_edges(
    sources: &Matrix,
    targets: &Matrix,
    same_set: bool,
    top_k: usize,
    relation: Relation,
    out: &mut Vec<Edge>,
) {
    let norms = row_norms(targets);
    for s in 0..sources.rows() {
        let sims = similarities(sources.row(s), targets, &norms);
        for t in top_indices(&sims, top_k, same_set.then_some(s)) {
            out.push(Edge { src: s, dst: t, relation });
        }
    }
}

/// Builds the training network: every node links to its `top_k` most similar
/// targets in each relation it is a source of.
pub fn build_train_network(u_hat: &Matrix, v: &Matrix, meta: &Matrix, top_k: usize) -> Result<GmNetwork> {
    if top_k < 1 {
        return Err(arg_err("top_k must be at least 1"));
    }
    if meta.rows() != u_hat.rows() {
        return Err(dim_err(format!(
            "{} meta-feature rows for {} graph factor rows",
            meta.rows(),
            u_hat.rows()
        )));
    }
    if u_hat.cols() != v.cols() {
        return Err(dim_err("graph and model factors differ in width"));
    }
    if meta.cols() == 0 || v.cols() == 0 {
        return Err(dim_err("zero-length node features"));
    }
    let mut edges = Vec::new();
    knn_edges(meta, meta, true, top_k, Relation::MetaG2G, &mut edges);
    knn_edges(u_hat, u_hat, true, top_k, Relation::PerfG2G, &mut edges);
    knn_edges(v, v, true, top_k, Relation::PerfM2M, &mut edges);
    knn_edges(u_hat, v, false, top_k, Relation::PerfG2M, &mut edges);
    knn_edges(v, u_hat, false, top_k, Relation::PerfM2G, &mut edges);
    let net = GmNetwork { meta: meta.clone(), u_hat: u_hat.clone(), v: v.clone(), top_k, edges };
    net.validate()?;
    Ok(net)
}

/// Adds one test graph node (index `n_graphs`) and the edges incident to it
/// that a rebuild with the test row appended would contain: its own top-k
/// out-edges in `M-g2g`, `P-g2g` and `P-g2m`, plus an in-edge from every
/// existing node whose top-k (in `M-g2g`, `P-g2g` or `P-m2g`) would now
/// include the test graph. Existing edges are kept as they are.
pub fn extend_with_test(net: &GmNetwork, meta_test: &[f64], u_hat_test: &[f64]) -> Result<GmNetwork> {
    if meta_test.len() != net.meta.cols() {
        return Err(dim_err(format!(
            "test meta-features have length {}, network expects {}",
            meta_test.len(),
            net.meta.cols()
        )));
    }
    if u_hat_test.len() != net.u_hat.cols() {
        return Err(dim_err(format!(
            "test graph factor has length {}, network expects {}",
            u_hat_test.len(),
            net.u_hat.cols()
        )));
    }
    let t = net.n_graphs();
    let k = net.top_k;
    let mut out = net.clone();
    out.meta = net.meta.vstack(&Matrix::from_vec(1, meta_test.len(), meta_test.to_vec())?)?;
    out.u_hat = net.u_hat.vstack(&Matrix::from_vec(1, u_hat_test.len(), u_hat_test.to_vec())?)?;

    let meta_norms = row_norms(&net.meta);
    let u_norms = row_norms(&net.u_hat);
    let v_norms = row_norms(&net.v);

    for (rel, q, cands, norms) in [
        (Relation::MetaG2G, meta_test, &net.meta, &meta_norms),
        (Relation::PerfG2G, u_hat_test, &net.u_hat, &u_norms),
        (Relation::PerfG2M, u_hat_test, &net.v, &v_norms),
    ] {
        for d in top_indices(&similarities(q, cands, norms), k, None) {
            out.edges.push(Edge { src: t, dst: d, relation: rel });
        }
    }

    // in-edges: source s picks t iff fewer than k of its existing candidates
    // are at least as similar (existing nodes win ties by lower index).
    let picks_test = |src_row: &[f64], cands: &Matrix, norms: &[f64], test_row: &[f64], exclude: Option<usize>| {
        let sims = similarities(src_row, cands, norms);
        let s_t = cosine(src_row, test_row);
        let better = sims
            .iter()
            .enumerate()
            .filter(|&(c, &s)| Some(c) != exclude && s >= s_t)
            .count();
        better < k
    };
    for s in 0..net.n_graphs() {
        if picks_test(net.meta.row(s), &net.meta, &meta_norms, meta_test, Some(s)) {
            out.edges.push(Edge { src: s, dst: t, relation: Relation::MetaG2G });
        }
        if picks_test(net.u_hat.row(s), &net.u_hat, &u_norms, u_hat_test, Some(s)) {
            out.edges.push(Edge { src: s, dst: t, relation: Relation::PerfG2G });
        }
    }
    for j in 0..net.n_models() {
        if picks_test(net.v.row(j), &net.u_hat, &u_norms, u_hat_test, None) {
            out.edges.push(Edge { src: j, dst: t, relation: Relation::PerfM2G });
        }
    }
    out.validate()?;
    Ok(out)
}
