//! Whole-graph scalar statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Graph;

pub const GLOBAL_NAMES: [&str; 3] = ["density", "density_aat", "assortativity"];

/// `[density of A, density of A·Aᵀ off the diagonal, degree assortativity]`.
pub fn global_stats(g: &Graph) -> Vec<f64> {
    vec![density(g), density_aat(g), degree_assortativity(g)]
}

pub fn density(g: &Graph) -> f64 {
    let n = g.node_count() as f64;
    if g.node_count() < 2 {
        return 0.0;
    }
    2.0 * g.edge_count() as f64 / (n * (n - 1.0))
}

/// Fraction of ordered node pairs `u != v` that share at least one neighbor,
/// i.e. the off-diagonal nonzeros of `A·Aᵀ`, found by marking two-hop
/// endpoints rather than forming the product.
pub fn density_aat(g: &Graph) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    let mut mark = vec![usize::MAX; n];
    let mut pairs = 0u64;
    for u in 0..n {
        for &w in g.neighbors(u) {
            for &v in g.neighbors(w as usize) {
                let v = v as usize;
                if v != u && mark[v] != u {
                    mark[v] = u;
                    pairs += 1;
                }
            }
        }
    }
    let nf = n as f64;
    pairs as f64 / (nf * (nf - 1.0))
}

/// Pearson correlation of endpoint degrees over all edges in both
/// orientations; 0 when degrees are constant across edge ends.
pub fn degree_assortativity(g: &Graph) -> f64 {
    let m2 = 2.0 * g.edge_count() as f64;
    if g.edge_count() == 0 {
        return 0.0;
    }
    let (mut sum, mut sq, mut cross) = (0.0, 0.0, 0.0);
    for &(u, v) in g.edges() {
        let du = g.node_degree(u as usize) as f64;
        let dv = g.node_degree(v as usize) as f64;
        sum += du + dv;
        sq += du * du + dv * dv;
        cross += 2.0 * du * dv;
    }
    let mean = sum / m2;
    let var = sq / m2 - mean * mean;
    if var <= 1e-12 * (1.0 + mean * mean) {
        return 0.0;
    }
    ((cross / m2 - mean * mean) / var).clamp(-1.0, 1.0)
}
