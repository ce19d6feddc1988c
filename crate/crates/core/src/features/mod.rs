//! Fixed-length meta-graph features.
//!
//! Each of the seven structural extractors yields a per-node (or per-edge)
//! distribution which is summarized by the statistics in [`stats`]; three
//! global scalars are appended and the whole vector is then extended with its
//! sign-preserving log transform `sign(x) ln(1 + |x|)`. The layout is
//! identified by [`SCHEMA_VERSION`].

pub mod global;
pub mod stats;
pub mod structural;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::Graph;

pub use global::global_stats;
pub use stats::{summarize, SUMMARY_LEN, SUMMARY_NAMES};
pub use structural::{extract, extract_structural, Extractor, StructuralDistribution};

/// Version of the feature layout produced by [`meta_graph_features`].
pub const SCHEMA_VERSION: u32 = 1;

/// Number of raw entries before the log extension.
pub const RAW_LEN: usize = Extractor::ALL.len() * SUMMARY_LEN + global::GLOBAL_NAMES.len();

/// Total feature length `d`.
pub const FEATURE_LEN: usize = 2 * RAW_LEN;

/// PageRank scores are snapped to this grid before summarizing so that
/// floating-point summation order (which depends on node labels) cannot
/// change counts such as the number of unique values.
const PAGERANK_GRID: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetaFeatureVector {
    pub values: Vec<f64>,
    pub schema_version: u32,
}

/// Column names of the feature layout.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_LEN);
    for ex in Extractor::ALL {
        for s in SUMMARY_NAMES {
            names.push(format!("{}.{}", ex.name(), s));
        }
    }
    for s in global::GLOBAL_NAMES {
        names.push(format!("global.{s}"));
    }
    let raw = names.clone();
    names.extend(raw.into_iter().map(|n| format!("log.{n}")));
    names
}

/// `sign(x) ln(1 + |x|)`
#[inline]
pub fn signed_log1p(x: f64) -> f64 {
    let l = libm::log1p(x.abs());
    if x < 0.0 {
        -l
    } else {
        l
    }
}

/// Reorders a distribution into a label-independent sequence.
///
/// Node values are ordered by `(degree, value)` and edge values by
/// `(min endpoint degree, max endpoint degree, value)`. Ties in the key have
/// equal values, so the resulting sequence depends only on graph structure.
fn canonical_sequence(g: &Graph, dist: &StructuralDistribution) -> Vec<f64> {
    let mut v = dist.values.clone();
    if dist.extractor == Extractor::PageRank {
        for x in &mut v {
            *x = libm::round(*x / PAGERANK_GRID) * PAGERANK_GRID;
        }
    }
    let keys: Vec<(usize, usize)> = if dist.extractor.is_edge_level() {
        g.edges()
            .iter()
            .map(|&(a, b)| {
                let (da, db) = (g.node_degree(a as usize), g.node_degree(b as usize));
                (da.min(db), da.max(db))
            })
            .collect()
    } else {
        (0..g.node_count()).map(|u| (g.node_degree(u), 0)).collect()
    };
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(v[a].total_cmp(&v[b])));
    idx.into_iter().map(|i| v[i]).collect()
}

/// Builds the feature vector from already-extracted distributions (in
/// [`Extractor::ALL`] order). Lets callers run extractors concurrently.
pub fn assemble(g: &Graph, dists: &[StructuralDistribution]) -> Result<MetaFeatureVector> {
    let mut raw = Vec::with_capacity(RAW_LEN);
    for (ex, dist) in Extractor::ALL.iter().zip(dists) {
        debug_assert_eq!(*ex, dist.extractor);
        if dist.values.is_empty() {
            // edge-level extractor on an edgeless graph
            raw.extend(core::iter::repeat_n(0.0, SUMMARY_LEN));
        } else {
            raw.extend(summarize(&canonical_sequence(g, dist))?);
        }
    }
    raw.extend(global_stats(g));
    let mut values = raw.clone();
    values.extend(raw.iter().map(|&x| signed_log1p(x)));
    for v in &mut values {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    Ok(MetaFeatureVector { values, schema_version: SCHEMA_VERSION })
}

/// Meta-graph feature vector of `g`.
pub fn meta_graph_features(g: &Graph) -> Result<MetaFeatureVector> {
    if g.node_count() == 0 {
        return Err(crate::Error::EmptyGraph);
    }
    assemble(g, &extract_structural(g))
}
