//! Extractor oracles and the fixed-length, relabeling-invariant layout.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;
use std::time::Instant;

use metagl_core::features::structural::{core_numbers, eccentricity, pagerank, triangle_counts, wedges_per_node};
use metagl_core::features::{meta_graph_features, FEATURE_LEN};
use metagl_core::rng::seeded;
use metagl_core::Graph;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{ensure, rel_close, Outcome};

/// Adjacency as a dense boolean matrix.
type Adj = Vec<Vec<bool>>;

fn pair_index(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Smallest edge bitmask over all relabelings.
fn canonical(mask: u32, n: usize, pairs: &[(usize, usize)], slot: &[Vec<usize>], perms: &[Vec<usize>]) -> u32 {
    let mut best = u32::MAX;
    for p in perms {
        let mut m = 0u32;
        for (b, &(i, j)) in pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                m |= 1 << slot[p[i]][p[j]];
            }
        }
        best = best.min(m);
    }
    let _ = n;
    best
}

fn mask_adj(mask: u32, n: usize, pairs: &[(usize, usize)]) -> Adj {
    let mut a = vec![vec![false; n]; n];
    for (b, &(i, j)) in pairs.iter().enumerate() {
        if mask >> b & 1 == 1 {
            a[i][j] = true;
            a[j][i] = true;
        }
    }
    a
}

fn connected(a: &Adj) -> bool {
    let n = a.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if a[u][v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Every connected graph on `1..=max_n` nodes, one per isomorphism class,
/// grown by attaching a new node to each subset of an existing graph.
pub fn connected_graphs(max_n: usize) -> Vec<(usize, Adj)> {
    let mut out = vec![(1, vec![vec![false]])];
    let mut level: BTreeSet<u32> = BTreeSet::from([0]);
    for n in 2..=max_n {
        let pairs = pair_index(n);
        let mut slot = vec![vec![0; n]; n];
        for (b, &(i, j)) in pairs.iter().enumerate() {
            slot[i][j] = b;
            slot[j][i] = b;
        }
        let prev_pairs = pair_index(n - 1);
        let perms = permutations(n);
        let mut next = BTreeSet::new();
        for &g in &level {
            let mut base = 0u32;
            for (b, &(i, j)) in prev_pairs.iter().enumerate() {
                if g >> b & 1 == 1 {
                    base |= 1 << slot[i][j];
                }
            }
            for subset in 0u32..(1 << (n - 1)) {
                let mut m = base;
                for v in 0..n - 1 {
                    if subset >> v & 1 == 1 {
                        m |= 1 << slot[v][n - 1];
                    }
                }
                next.insert(canonical(m, n, &pairs, &slot, &perms));
            }
        }
        for &m in &next {
            let a = mask_adj(m, n, &pairs);
            if connected(&a) {
                out.push((n, a));
            }
        }
        level = next;
    }
    out
}

fn to_graph(a: &Adj) -> Graph {
    let n = a.len();
    let pairs: Vec<(usize, usize)> = pair_index(n).into_iter().filter(|&(i, j)| a[i][j]).collect();
    Graph::from_edges(n, &pairs).unwrap()
}

fn random_er(n: usize, p: f64, rng: &mut impl Rng) -> Adj {
    let mut a = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                a[i][j] = true;
                a[j][i] = true;
            }
        }
    }
    a
}

fn brute_triangles_per_node(a: &Adj) -> Vec<f64> {
    let n = a.len();
    let mut t = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if a[i][j] && a[j][k] && a[i][k] {
                    t[i] += 1.0;
                    t[j] += 1.0;
                    t[k] += 1.0;
                }
            }
        }
    }
    t
}

fn brute_wedges(a: &Adj) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|c| {
            let mut w = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    if i != c && j != c && a[c][i] && a[c][j] {
                        w += 1.0;
                    }
                }
            }
            w
        })
        .collect()
}

/// Core number as the largest `k` whose iterated-peeling `k`-core keeps
/// the node.
fn brute_core(a: &Adj) -> Vec<u32> {
    let n = a.len();
    let mut core = vec![0u32; n];
    for k in 1..=n as u32 {
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] {
                    let d = (0..n).filter(|&u| alive[u] && a[v][u]).count() as u32;
                    if d < k {
                        alive[v] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}

/// Floyd-Warshall, largest finite distance per node.
fn brute_eccentricity(a: &Adj) -> Vec<u32> {
    let n = a.len();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    (0..n).map(|i| d[i].iter().copied().filter(|&x| x < INF).max().unwrap()).collect()
}

/// Dense power iteration run to a fixed point.
fn reference_pagerank(a: &Adj) -> Vec<f64> {
    let n = a.len();
    let deg: Vec<usize> = a.iter().map(|r| r.iter().filter(|&&x| x).count()).collect();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..100_000 {
        let mut y = vec![0.0; n];
        let dangling: f64 = (0..n).filter(|&u| deg[u] == 0).map(|u| x[u]).sum();
        for v in 0..n {
            let mut s = 0.0;
            for u in 0..n {
                if a[u][v] {
                    s += x[u] / deg[u] as f64;
                }
            }
            y[v] = 0.15 / nf + 0.85 * (s + dangling / nf);
        }
        let delta: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum();
        x = y;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// Mismatch description for one graph, if any.
fn check_graph(a: &Adj) -> Option<String> {
    let g = to_graph(a);
    let n = a.len();
    let (tri_node, tri_edge) = triangle_counts(&g);
    if tri_node != brute_triangles_per_node(a) {
        return Some(format!("node triangles differ on {n}-node graph"));
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let (u, v) = (u as usize, v as usize);
        let t = (0..n).filter(|&w| a[u][w] && a[v][w]).count() as f64;
        if tri_edge[e] != t {
            return Some(format!("edge ({u}, {v}) triangles {} vs {t}", tri_edge[e]));
        }
    }
    if wedges_per_node(&g) != brute_wedges(a) {
        return Some(format!("wedges differ on {n}-node graph"));
    }
    if core_numbers(&g) != brute_core(a) {
        return Some(format!("core numbers differ on {n}-node graph"));
    }
    if eccentricity(&g) != brute_eccentricity(a) {
        return Some(format!("eccentricity differs on {n}-node graph"));
    }
    let l1: f64 = pagerank(&g).iter().zip(reference_pagerank(a)).map(|(p, q)| (p - q).abs()).sum();
    if l1 >= 1e-8 {
        return Some(format!("PageRank L1 error {l1:e} on {n}-node graph"));
    }
    None
}

pub fn extractor_oracles() -> Outcome {
    let start = Instant::now();
    let small = connected_graphs(7);
    let mut per_size = [0usize; 8];
    for (n, _) in &small {
        per_size[*n] += 1;
    }
    // connected graphs on 1..=7 nodes up to isomorphism
    ensure!(per_size[1..] == [1, 1, 2, 6, 21, 112, 853], "enumeration produced {:?}", &per_size[1..]);
    for (_, a) in &small {
        if let Some(msg) = check_graph(a) {
            return Err(msg);
        }
    }
    let mut rng = seeded(0xE5);
    for _ in 0..100 {
        let n = rng.gen_range(2..=50);
        let p = rng.gen_range(0.02..0.5);
        let a = random_er(n, p, &mut rng);
        if let Some(msg) = check_graph(&a) {
            return Err(msg);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{} small graphs and 100 random graphs exact, PageRank L1 < 1e-8", small.len()))
}

pub fn fixed_size_features() -> Outcome {
    let mut rng = seeded(0xF1);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let n = rng.gen_range(5..=500);
        let mean_deg = rng.gen_range(1.0..8.0);
        let p = (mean_deg / (n - 1) as f64).min(1.0);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(n, &pairs).unwrap();
        let f = meta_graph_features(&g).map_err(|e| format!("graph {t}: {e}"))?;
        ensure!(f.values.len() == FEATURE_LEN, "graph {t} has {} features", f.values.len());
        ensure!(f.values.iter().all(|v| v.is_finite()), "graph {t} has non-finite features");
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let h = meta_graph_features(&g.permuted(&perm).unwrap()).unwrap();
        for (k, (a, b)) in f.values.iter().zip(&h.values).enumerate() {
            ensure!(rel_close(*a, *b, 1e-12), "graph {t} feature {k}: {a} vs {b} after relabeling");
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Ok(format!("100 graphs give {FEATURE_LEN} finite values, worst relabeling drift {worst:e}"))
}
