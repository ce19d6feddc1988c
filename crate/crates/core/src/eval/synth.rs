//! Random graph generators and the planted synthetic corpus.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{arg_err, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::perf::PerformanceMatrix;
use crate::rng::{derive, seeded, Rng};

/// G(n, p).
pub fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Preferential attachment: each new node links to `m` distinct existing
/// nodes chosen proportionally to degree. Starts from a star on `m + 1` nodes.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut Rng) -> Result<Graph> {
    if m == 0 || n <= m {
        return Err(arg_err(format!("Barabasi-Albert needs n > m >= 1, got n = {n}, m = {m}")));
    }
    let mut edges: Vec<(usize, usize)> = (1..=m).map(|v| (0, v)).collect();
    let mut ends: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    for u in m + 1..n {
        let mut picked = BTreeSet::new();
        while picked.len() < m {
            picked.insert(ends[rng.gen_range(0..ends.len())]);
        }
        for &v in &picked {
            edges.push((v, u));
            ends.push(v);
            ends.push(u);
        }
    }
    Graph::from_edges(n, &edges)
}

/// Ring lattice where each node links to its `k / 2` nearest neighbors on
/// each side; each edge's far end is rewired with probability `beta` to a
/// uniform node, avoiding self-loops and duplicates.
pub fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut Rng) -> Result<Graph> {
    if k < 2 || !k.is_multiple_of(2) || k >= n {
        return Err(arg_err(format!("Watts-Strogatz needs an even 2 <= k < n, got n = {n}, k = {k}")));
    }
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut set = BTreeSet::new();
    let mut list = Vec::new();
    for u in 0..n {
        for j in 1..=k / 2 {
            let e = key(u, (u + j) % n);
            set.insert(e);
            list.push((u, (u + j) % n));
        }
    }
    for e in list.iter_mut() {
        if rng.gen::<f64>() < beta {
            let (u, v) = *e;
            let w = rng.gen_range(0..n);
            if w != u && !set.contains(&key(u, w)) {
                set.remove(&key(u, v));
                set.insert(key(u, w));
                *e = (u, w);
            }
        }
    }
    let edges: Vec<(usize, usize)> = set.into_iter().collect();
    Graph::from_edges(n, &edges)
}

pub const FAMILY_NAMES: [&str; 3] = ["erdos-renyi", "barabasi-albert", "watts-strogatz"];
pub const MIN_NODES: usize = 30;
pub const MAX_NODES: usize = 200;
pub const DOMINANT_PERF: f64 = 0.8;
pub const BASE_PERF: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub graphs: Vec<Graph>,
    pub graph_ids: Vec<String>,
    pub families: Vec<usize>,
    /// Best model of each family.
    pub dominant: Vec<usize>,
    pub noise: f64,
    pub p: PerformanceMatrix,
}

/// Graphs alternate over `families` generator families (sparse Erdős–Rényi
/// with mean degree 4, Barabási–Albert with 2 links per node, Watts–Strogatz
/// with 4 neighbors and rewiring 0.1), with 30 to 200 nodes each. Every
/// family has one dominant model scoring 0.8 while the rest score 0.4, each
/// entry shifted by uniform noise in `[-noise, noise]` and clipped to [0, 1].
pub fn generate_synthetic_corpus(
    n_graphs: usize,
    families: usize,
    m_models: usize,
    noise: f64,
    seed: u64,
) -> Result<SyntheticCorpus> {
    if families == 0 || families > FAMILY_NAMES.len() {
        return Err(arg_err(format!("families must be between 1 and {}", FAMILY_NAMES.len())));
    }
    if n_graphs < families {
        return Err(arg_err("need at least one graph per family"));
    }
    if m_models < families {
        return Err(arg_err("need at least as many models as families"));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(arg_err("noise must lie in [0, 1]"));
    }
    let mut rng = seeded(derive(seed, 11));
    let mut models: Vec<usize> = (0..m_models).collect();
    models.shuffle(&mut rng);
    let dominant = models[..families].to_vec();

    let mut graphs = Vec::with_capacity(n_graphs);
    let mut fams = Vec::with_capacity(n_graphs);
    let mut values = Matrix::zeros(n_graphs, m_models);
    for i in 0..n_graphs {
        let f = i % families;
        let n = rng.gen_range(MIN_NODES..=MAX_NODES);
        let g = match f {
            0 => erdos_renyi(n, 4.0 / (n - 1) as f64, &mut rng)?,
            1 => barabasi_albert(n, 2, &mut rng)?,
            _ => watts_strogatz(n, 4, 0.1, &mut rng)?,
        };
        graphs.push(g);
        fams.push(f);
        for j in 0..m_models {
            let base = if j == dominant[f] { DOMINANT_PERF } else { BASE_PERF };
            let eps = if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 };
            values[(i, j)] = (base + eps).clamp(0.0, 1.0);
        }
    }
    let graph_ids: Vec<String> = (0..n_graphs).map(|i| format!("{}-{i:03}", FAMILY_NAMES[fams[i]])).collect();
    let model_ids = (0..m_models).map(|j| format!("m{j}")).collect();
    let p = PerformanceMatrix::new(values, alloc::vec![true; n_graphs * m_models], graph_ids.clone(), model_ids)?;
    Ok(SyntheticCorpus { graphs, graph_ids, families: fams, dominant, noise, p })
}
