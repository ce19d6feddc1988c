//! Node- and edge-level structural extractors.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Graph;

/// PageRank damping factor.
pub const PAGERANK_DAMPING: f64 = 0.85;
/// L1 change between iterates below which PageRank stops.
pub const PAGERANK_TOLERANCE: f64 = 1e-10;
pub const PAGERANK_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Extractor {
    Degree,
    WedgesPerNode,
    TrianglesPerNode,
    TrianglesPerEdge,
    Eccentricity,
    PageRank,
    KCore,
}

impl Extractor {
    /// Fixed extraction order of the feature layout.
    pub const ALL: [Extractor; 7] = [
        Extractor::Degree,
        Extractor::WedgesPerNode,
        Extractor::TrianglesPerNode,
        Extractor::TrianglesPerEdge,
        Extractor::Eccentricity,
        Extractor::PageRank,
        Extractor::KCore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Extractor::Degree => "degree",
            Extractor::WedgesPerNode => "wedges_per_node",
            Extractor::TrianglesPerNode => "triangles_per_node",
            Extractor::TrianglesPerEdge => "triangles_per_edge",
            Extractor::Eccentricity => "eccentricity",
            Extractor::PageRank => "pagerank",
            Extractor::KCore => "kcore",
        }
    }

    pub fn is_edge_level(self) -> bool {
        self == Extractor::TrianglesPerEdge
    }
}

/// Values of one extractor over the nodes (or edges) of a graph, indexed by
/// node id (or canonical edge id).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralDistribution {
    pub extractor: Extractor,
    pub values: Vec<f64>,
}

pub fn extract(g: &Graph, which: Extractor) -> StructuralDistribution {
    let values = match which {
        Extractor::Degree => g.degree().into_iter().map(|d| d as f64).collect(),
        Extractor::WedgesPerNode => wedges_per_node(g),
        Extractor::TrianglesPerNode => triangle_counts(g).0,
        Extractor::TrianglesPerEdge => triangle_counts(g).1,
        Extractor::Eccentricity => eccentricity(g).into_iter().map(|e| e as f64).collect(),
        Extractor::PageRank => pagerank(g),
        Extractor::KCore => core_numbers(g).into_iter().map(|k| k as f64).collect(),
    };
    StructuralDistribution { extractor: which, values }
}

/// All seven extractors in [`Extractor::ALL`] order.
pub fn extract_structural(g: &Graph) -> Vec<StructuralDistribution> {
    let (tri_node, tri_edge) = triangle_counts(g);
    Extractor::ALL
        .iter()
        .map(|&which| match which {
            Extractor::TrianglesPerNode => {
                StructuralDistribution { extractor: which, values: tri_node.clone() }
            }
            Extractor::TrianglesPerEdge => {
                StructuralDistribution { extractor: which, values: tri_edge.clone() }
            }
            _ => extract(g, which),
        })
        .collect()
}

/// Paths of length two centered at each node: `C(deg, 2)`.
pub fn wedges_per_node(g: &Graph) -> Vec<f64> {
    (0..g.node_count())
        .map(|u| {
            let d = g.node_degree(u) as f64;
            d * (d - 1.0) / 2.0
        })
        .collect()
}

/// Exact triangle counts per node and per edge.
///
/// Edges are oriented from lower to higher `(degree, id)` rank so every
/// triangle is found once by intersecting two forward lists; cost is
/// `O(|E|^1.5)`.
pub fn triangle_counts(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    let n = g.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&u| (g.node_degree(u), u));
    let mut rank = vec![0usize; n];
    for (r, &u) in order.iter().enumerate() {
        rank[u] = r;
    }
    // forward lists sorted by rank of the target: (rank, node, edge id)
    let mut fwd: Vec<Vec<(usize, u32, u32)>> = vec![Vec::new(); n];
    for u in 0..n {
        for (&v, &e) in g.neighbors(u).iter().zip(g.incident_edges(u)) {
            if rank[v as usize] > rank[u] {
                fwd[u].push((rank[v as usize], v, e));
            }
        }
        fwd[u].sort_unstable();
    }
    let mut tri_node = vec![0u64; n];
    let mut tri_edge = vec![0u64; g.edge_count()];
    for u in 0..n {
        for &(_, v, e_uv) in &fwd[u] {
            let (a, b) = (&fwd[u], &fwd[v as usize]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].0.cmp(&b[j].0) {
                    core::cmp::Ordering::Less => i += 1,
                    core::cmp::Ordering::Greater => j += 1,
                    core::cmp::Ordering::Equal => {
                        let w = a[i].1 as usize;
                        tri_node[u] += 1;
                        tri_node[v as usize] += 1;
                        tri_node[w] += 1;
                        tri_edge[e_uv as usize] += 1;
                        tri_edge[a[i].2 as usize] += 1;
                        tri_edge[b[j].2 as usize] += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    (
        tri_node.into_iter().map(|c| c as f64).collect(),
        tri_edge.into_iter().map(|c| c as f64).collect(),
    )
}

fn bfs(g: &Graph, src: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> u32 {
    dist.iter_mut().for_each(|d| *d = u32::MAX);
    dist[src] = 0;
    queue.clear();
    queue.push_back(src);
    let mut far = 0;
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        far = du;
        for &v in g.neighbors(u) {
            let v = v as usize;
            if dist[v] == u32::MAX {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    far
}

/// Connected-component label of every node, components numbered by their
/// smallest node.
pub fn components(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in g.neighbors(u) {
                if comp[v as usize] == usize::MAX {
                    comp[v as usize] = next;
                    stack.push(v as usize);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Eccentricity of each node within its connected component.
///
/// Uses eccentricity bounding: after a BFS from `v` with eccentricity `e`,
/// every `w` at distance `d` satisfies `max(e - d, d) <= ecc(w) <= e + d`.
/// Nodes whose bounds meet are settled without their own BFS; sources
/// alternate between the largest upper and smallest lower bound. Once a
/// component is known to have a small diameter, the nodes still open are
/// finished with a bit-parallel BFS from 64 sources at a time.
pub fn eccentricity(g: &Graph) -> Vec<u32> {
    let n = g.node_count();
    let comp = components(g);
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (u, &c) in comp.iter().enumerate() {
        if c == members.len() {
            members.push(Vec::new());
        }
        members[c].push(u);
    }
    let mut ecc = vec![0u32; n];
    let mut lower = vec![0u32; n];
    let mut upper = vec![u32::MAX; n];
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for nodes in members {
        if nodes.len() == 1 {
            continue;
        }
        let mut open = nodes.clone();
        let mut pick_upper = true;
        let mut radius_bound = u32::MAX;
        let mut searches = 0;
        while !open.is_empty() {
            if searches >= BOUNDING_SEARCHES && open.len() > 64 && radius_bound <= BIT_PARALLEL_MAX_RADIUS {
                bit_parallel_eccentricity(g, &nodes, &open, &mut ecc);
                break;
            }
            searches += 1;
            let &v = if pick_upper {
                open.iter()
                    .max_by_key(|&&w| (upper[w], g.node_degree(w), core::cmp::Reverse(w)))
                    .unwrap()
            } else {
                open.iter()
                    .min_by_key(|&&w| (lower[w], core::cmp::Reverse(g.node_degree(w)), w))
                    .unwrap()
            };
            pick_upper = !pick_upper;
            let e = bfs(g, v, &mut dist, &mut queue);
            radius_bound = radius_bound.min(e);
            ecc[v] = e;
            lower[v] = e;
            upper[v] = e;
            open.retain(|&w| {
                if w == v {
                    return false;
                }
                let d = dist[w];
                lower[w] = lower[w].max(e.saturating_sub(d).max(d));
                upper[w] = upper[w].min(e + d);
                if lower[w] == upper[w] {
                    ecc[w] = lower[w];
                    false
                } else {
                    true
                }
            });
        }
    }
    ecc
}

/// Bounded searches per component before the bit-parallel fallback is
/// considered.
const BOUNDING_SEARCHES: usize = 16;
/// The fallback runs only when every node of the component is within this
/// many hops of some node, so each batch needs at most twice as many levels.
const BIT_PARALLEL_MAX_RADIUS: u32 = 32;

/// Exact eccentricity of each node in `sources`, all members of the
/// connected component `nodes`, by 64-wide bitset BFS.
fn bit_parallel_eccentricity(g: &Graph, nodes: &[usize], sources: &[usize], ecc: &mut [u32]) {
    let mut local = vec![u32::MAX; g.node_count()];
    for (i, &u) in nodes.iter().enumerate() {
        local[u] = i as u32;
    }
    let mut offsets = Vec::with_capacity(nodes.len() + 1);
    let mut adj = Vec::new();
    offsets.push(0);
    for &u in nodes {
        adj.extend(g.neighbors(u).iter().map(|&v| local[v as usize]));
        offsets.push(adj.len());
    }
    let c = nodes.len();
    let mut visited = vec![0u64; c];
    let mut frontier = vec![0u64; c];
    let mut next = vec![0u64; c];
    for batch in sources.chunks(64) {
        visited.iter_mut().for_each(|w| *w = 0);
        frontier.iter_mut().for_each(|w| *w = 0);
        for (bit, &s) in batch.iter().enumerate() {
            let i = local[s] as usize;
            visited[i] |= 1 << bit;
            frontier[i] |= 1 << bit;
        }
        let mut level = 0;
        loop {
            let mut reached = 0u64;
            for v in 0..c {
                let mut w = 0u64;
                for &u in &adj[offsets[v]..offsets[v + 1]] {
                    w |= frontier[u as usize];
                }
                w &= !visited[v];
                next[v] = w;
                reached |= w;
            }
            if reached == 0 {
                break;
            }
            level += 1;
            for v in 0..c {
                visited[v] |= next[v];
            }
            for (bit, &s) in batch.iter().enumerate() {
                if reached >> bit & 1 == 1 {
                    ecc[s] = level;
                }
            }
            core::mem::swap(&mut frontier, &mut next);
        }
    }
}

/// PageRank with uniform teleport; dangling mass is spread uniformly.
pub fn pagerank(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    if n == 0 {
        return Vec::new();
    }
    let nf = n as f64;
    let mut pr = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let mut dangling = 0.0;
        for u in 0..n {
            let d = g.node_degree(u);
            if d == 0 {
                dangling += pr[u];
                share[u] = 0.0;
            } else {
                share[u] = pr[u] / d as f64;
            }
        }
        let base = (1.0 - PAGERANK_DAMPING) / nf + PAGERANK_DAMPING * dangling / nf;
        let mut delta = 0.0;
        for v in 0..n {
            let s: f64 = g.neighbors(v).iter().map(|&u| share[u as usize]).sum();
            next[v] = base + PAGERANK_DAMPING * s;
            delta += (next[v] - pr[v]).abs();
        }
        core::mem::swap(&mut pr, &mut next);
        if delta < PAGERANK_TOLERANCE {
            break;
        }
    }
    pr
}

/// Core number of every node (bucket peeling, `O(|V| + |E|)`).
pub fn core_numbers(g: &Graph) -> Vec<u32> {
    let n = g.node_count();
    let mut deg: Vec<usize> = g.degree();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let c = *b;
        *b = start;
        start += c;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;
    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            let u = u as usize;
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg.into_iter().map(|d| d as u32).collect()
}
