//! Graph loading and parallel meta-feature extraction.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use metagl_core::features::structural::{extract, Extractor};
use metagl_core::features::{assemble, MetaFeatureVector};
use metagl_core::graph::{load_edge_list, Graph};
use rayon::prelude::*;

pub fn load_graph(path: &Path) -> anyhow::Result<Graph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Meta-features with the structural extractors run in parallel.
pub fn features_parallel(g: &Graph) -> anyhow::Result<MetaFeatureVector> {
    let dists: Vec<_> = Extractor::ALL.par_iter().map(|&e| extract(g, e)).collect();
    Ok(assemble(g, &dists)?)
}

/// Graph id of an edge-list file: its file name without the extension.
pub fn graph_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Regular, non-hidden files of a directory, sorted by path.
pub fn graph_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub id: String,
    pub values: Vec<f64>,
    pub nodes: usize,
    pub edges: usize,
    pub seconds: f64,
}

pub fn extract_graph(id: String, g: &Graph) -> anyhow::Result<FeatureRow> {
    let start = Instant::now();
    let f = features_parallel(g)?;
    Ok(FeatureRow { id, values: f.values, nodes: g.node_count(), edges: g.edge_count(), seconds: start.elapsed().as_secs_f64() })
}

/// Files that could not be read or extracted, with their errors.
pub type Skipped = Vec<(PathBuf, anyhow::Error)>;

/// Extracts every file in parallel. Returns rows sorted by graph id and the
/// files that failed, with their errors.
pub fn extract_files(files: &[PathBuf]) -> anyhow::Result<(Vec<FeatureRow>, Skipped)> {
    let results: Vec<_> = files
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let row = load_graph(p).and_then(|g| extract_graph(graph_id(p), &g));
            (p.clone(), row.map(|mut r| {
                r.seconds = start.elapsed().as_secs_f64();
                r
            }))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (p, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failed.push((p, e)),
        }
    }
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = rows.windows(2).find(|w| w[0].id == w[1].id) {
        bail!("two graph files share the id {:?}", w[0].id);
    }
    Ok((rows, failed))
}

/// Extracts in-memory graphs in parallel, keeping their order.
pub fn extract_graphs(ids: &[String], graphs: &[Graph]) -> anyhow::Result<Vec<FeatureRow>> {
    ids.par_iter().zip(graphs.par_iter()).map(|(id, g)| extract_graph(id.clone(), g)).collect()
}
