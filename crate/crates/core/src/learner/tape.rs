//! Reverse-mode differentiation over dense matrices.
//!
//! Values are computed eagerly as nodes are pushed; `backward` walks the tape
//! once in reverse. Only the operations the attentive aggregator needs are
//! provided, several of them fused so their backward pass stays short.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;

pub type NodeId = usize;

/// One relation feeding a target node type in [`Tape::rel_attention`].
#[derive(Debug, Clone)]
pub struct RelInput {
    /// Source keys, `n_src x k`.
    pub key: NodeId,
    /// Source values, `n_src x k`.
    pub value: NodeId,
    /// Per-head attention transforms stacked vertically, `k x dk`.
    pub att: NodeId,
    /// Per-head message transforms stacked vertically, `k x dk`.
    pub msg: NodeId,
    /// Per-head scalar priors, `1 x heads`.
    pub prior: NodeId,
    /// `(source, target)` pairs.
    pub edges: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// `a · bᵀ`
    MatMulBt(NodeId, NodeId),
    Gelu(NodeId),
    /// `σ(s)·a + (1 − σ(s))·b` with scalar `s`.
    Mix { a: NodeId, b: NodeId, s: NodeId },
    RelAttention {
        query: NodeId,
        rels: Vec<RelInput>,
        heads: usize,
        /// Attention weight per relation, edge and head.
        weights: Vec<Vec<f64>>,
        /// Keys and values after the per-head transforms.
        kw: Vec<Matrix>,
        mw: Vec<Matrix>,
    },
    Top1Loss { scores: NodeId, target: Matrix, mask: Vec<bool> },
}

struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::tanh(GELU_C * (x + GELU_A * x * x * x)))
}

fn gelu_grad(x: f64) -> f64 {
    let t = libm::tanh(GELU_C * (x + GELU_A * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Softmax over the observed entries of a row; unobserved entries get 0.
pub(crate) fn masked_softmax(row: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = row
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = row
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { libm::exp(v - max) } else { 0.0 })
        .collect();
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        out.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

fn head_block(m: &Matrix, row: usize, head: usize, dk: usize) -> &[f64] {
    &m.row(row)[head * dk..(head + 1) * dk]
}

/// `x[head block] · T_head` where `t` stacks the heads' `dk x dk` blocks.
fn head_transform(x: &Matrix, t: &Matrix, heads: usize) -> Matrix {
    let dk = x.cols() / heads;
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        for a in 0..heads {
            let xi = head_block(x, i, a, dk);
            let o = &mut out.row_mut(i)[a * dk..(a + 1) * dk];
            for (p, &xv) in xi.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let trow = t.row(a * dk + p);
                for (ov, tv) in o.iter_mut().zip(trow) {
                    *ov += xv * tv;
                }
            }
        }
    }
    out
}

/// Adjoint of [`head_transform`]: returns `(dx, dt)` for output gradient `g`.
fn head_transform_back(x: &Matrix, t: &Matrix, g: &Matrix, heads: usize) -> (Matrix, Matrix) {
    let dk = x.cols() / heads;
    let mut dx = Matrix::zeros(x.rows(), x.cols());
    let mut dt = Matrix::zeros(t.rows(), t.cols());
    for i in 0..x.rows() {
        for a in 0..heads {
            let gi = head_block(g, i, a, dk);
            for p in 0..dk {
                let xv = x.row(i)[a * dk + p];
                let trow = t.row(a * dk + p);
                dx.row_mut(i)[a * dk + p] = gi.iter().zip(trow).map(|(g, t)| g * t).sum();
                let dtrow = dt.row_mut(a * dk + p);
                for (d, gv) in dtrow.iter_mut().zip(gi) {
                    *d += xv * gv;
                }
            }
        }
    }
    (dx, dt)
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id].value
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b)).expect("matmul shapes");
        self.push(v, Op::MatMul(a, b))
    }

    pub fn matmul_bt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul_bt(self.value(b)).expect("matmul_bt shapes");
        self.push(v, Op::MatMulBt(a, b))
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let x = self.value(a);
        let v = Matrix::from_fn(x.rows(), x.cols(), |i, j| gelu(x[(i, j)]));
        self.push(v, Op::Gelu(a))
    }

    pub fn mix(&mut self, a: NodeId, b: NodeId, s: NodeId) -> NodeId {
        let alpha = sigmoid(self.value(s)[(0, 0)]);
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "mix shapes");
        let v = Matrix::from_fn(va.rows(), va.cols(), |i, j| alpha * va[(i, j)] + (1.0 - alpha) * vb[(i, j)]);
        self.push(v, Op::Mix { a, b, s })
    }

    /// Multi-head attention aggregation into one target node type. For each
    /// head, every target normalizes the logits of all its in-edges (across
    /// relations) with a softmax and sums the transformed source values.
    /// Targets without in-edges receive zeros.
    pub fn rel_attention(&mut self, query: NodeId, n_targets: usize, rels: Vec<RelInput>, heads: usize) -> NodeId {
        let q = self.value(query);
        let k = q.cols();
        let dk = k / heads;
        let scale = 1.0 / libm::sqrt(dk as f64);
        let mut kw = Vec::with_capacity(rels.len());
        let mut mw = Vec::with_capacity(rels.len());
        let mut logits: Vec<Vec<f64>> = Vec::with_capacity(rels.len());
        for r in &rels {
            let kt = head_transform(self.value(r.key), self.value(r.att), heads);
            let mt = head_transform(self.value(r.value), self.value(r.msg), heads);
            let prior = self.value(r.prior);
            let mut lg = Vec::with_capacity(r.edges.len() * heads);
            for &(s, t) in &r.edges {
                for a in 0..heads {
                    let dotp: f64 = head_block(&kt, s as usize, a, dk)
                        .iter()
                        .zip(head_block(q, t as usize, a, dk))
                        .map(|(x, y)| x * y)
                        .sum();
                    lg.push(dotp * prior[(0, a)] * scale);
                }
            }
            kw.push(kt);
            mw.push(mt);
            logits.push(lg);
        }
        // softmax per (target, head)
        let mut max = vec![f64::NEG_INFINITY; n_targets * heads];
        for (r, rel) in rels.iter().enumerate() {
            for (e, &(_, t)) in rel.edges.iter().enumerate() {
                for a in 0..heads {
                    let slot = t as usize * heads + a;
                    max[slot] = max[slot].max(logits[r][e * heads + a]);
                }
            }
        }
        let mut denom = vec![0.0; n_targets * heads];
        let mut weights = logits;
        for (r, rel) in rels.iter().enumerate() {
            for (e, &(_, t)) in rel.edges.iter().enumerate() {
                for a in 0..heads {
                    let slot = t as usize * heads + a;
                    let w = libm::exp(weights[r][e * heads + a] - max[slot]);
                    weights[r][e * heads + a] = w;
                    denom[slot] += w;
                }
            }
        }
        let mut out = Matrix::zeros(n_targets, k);
        for (r, rel) in rels.iter().enumerate() {
            for (e, &(s, t)) in rel.edges.iter().enumerate() {
                for a in 0..heads {
                    let slot = t as usize * heads + a;
                    let w = weights[r][e * heads + a] / denom[slot];
                    weights[r][e * heads + a] = w;
                    let src = head_block(&mw[r], s as usize, a, dk);
                    let dst = &mut out.row_mut(t as usize)[a * dk..(a + 1) * dk];
                    for (o, v) in dst.iter_mut().zip(src) {
                        *o += w * v;
                    }
                }
            }
        }
        self.push(out, Op::RelAttention { query, rels, heads, weights, kw, mw })
    }

    /// Sum over rows of the cross entropy between the top-1 probabilities of
    /// `target` and of `scores`, both taken over the row's observed columns.
    pub fn top1_loss(&mut self, scores: NodeId, target: &Matrix, mask: &[bool]) -> NodeId {
        let s = self.value(scores);
        assert_eq!(s.shape(), target.shape(), "loss shapes");
        let loss = super::top1_loss_masked(target, s, mask);
        let v = Matrix::from_vec(1, 1, vec![loss]).expect("scalar");
        self.push(v, Op::Top1Loss { scores, target: target.clone(), mask: mask.to_vec() })
    }

    /// Gradients of the scalar node `output` with respect to every leaf.
    /// Entries for leaves the output does not depend on, and for all interior
    /// nodes, are `None`.
    pub fn backward(&self, output: NodeId) -> Vec<Option<Matrix>> {
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output] = Some(Matrix::filled(1, 1, 1.0));
        for id in (0..=output).rev() {
            let node = &self.nodes[id];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul_bt(self.value(*b)).expect("shapes");
                    let db = self.value(*a).matmul_at(&g).expect("shapes");
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::MatMulBt(a, b) => {
                    let da = g.matmul(self.value(*b)).expect("shapes");
                    let db = g.matmul_at(self.value(*a)).expect("shapes");
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Gelu(a) => {
                    let x = self.value(*a);
                    let d = Matrix::from_fn(x.rows(), x.cols(), |i, j| g[(i, j)] * gelu_grad(x[(i, j)]));
                    accumulate(&mut grads, *a, d);
                }
                Op::Mix { a, b, s } => {
                    let alpha = sigmoid(self.value(*s)[(0, 0)]);
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let mut ds = 0.0;
                    for ((gv, x), y) in g.data().iter().zip(va.data()).zip(vb.data()) {
                        ds += gv * (x - y);
                    }
                    let mut da = g.clone();
                    da.scale(alpha);
                    let mut db = g.clone();
                    db.scale(1.0 - alpha);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                    accumulate(&mut grads, *s, Matrix::filled(1, 1, ds * alpha * (1.0 - alpha)));
                }
                Op::RelAttention { query, rels, heads, weights, kw, mw } => {
                    self.attention_backward(&g, *query, rels, *heads, weights, kw, mw, &mut grads);
                }
                Op::Top1Loss { scores, target, mask } => {
                    let s = self.value(*scores);
                    let gs = g[(0, 0)];
                    let mut d = Matrix::zeros(s.rows(), s.cols());
                    for i in 0..s.rows() {
                        let m = &mask[i * s.cols()..(i + 1) * s.cols()];
                        if !m.iter().any(|&x| x) {
                            continue;
                        }
                        let q = masked_softmax(target.row(i), m);
                        let qh = masked_softmax(s.row(i), m);
                        for j in 0..s.cols() {
                            if m[j] {
                                d.row_mut(i)[j] = gs * (qh[j] - q[j]);
                            }
                        }
                    }
                    accumulate(&mut grads, *scores, d);
                }
            }
        }
        grads
    }

    #[allow(clippy::too_many_arguments)]
    fn attention_backward(
        &self,
        g: &Matrix,
        query: NodeId,
        rels: &[RelInput],
        heads: usize,
        weights: &[Vec<f64>],
        kw: &[Matrix],
        mw: &[Matrix],
        grads: &mut [Option<Matrix>],
    ) {
        let q = self.value(query);
        let n_t = q.rows();
        let k = q.cols();
        let dk = k / heads;
        let scale = 1.0 / libm::sqrt(dk as f64);
        // d weight for every edge/head, and the per-(target, head) weighted sum
        let mut dw: Vec<Vec<f64>> = Vec::with_capacity(rels.len());
        let mut wsum = vec![0.0; n_t * heads];
        for (r, rel) in rels.iter().enumerate() {
            let mut d = Vec::with_capacity(rel.edges.len() * heads);
            for (e, &(s, t)) in rel.edges.iter().enumerate() {
                for a in 0..heads {
                    let v: f64 = head_block(g, t as usize, a, dk)
                        .iter()
                        .zip(head_block(&mw[r], s as usize, a, dk))
                        .map(|(x, y)| x * y)
                        .sum();
                    wsum[t as usize * heads + a] += weights[r][e * heads + a] * v;
                    d.push(v);
                }
            }
            dw.push(d);
        }
        let mut dq = Matrix::zeros(n_t, k);
        for (r, rel) in rels.iter().enumerate() {
            let prior = self.value(rel.prior);
            let mut dkw = Matrix::zeros(kw[r].rows(), k);
            let mut dmw = Matrix::zeros(mw[r].rows(), k);
            let mut dprior = Matrix::zeros(1, heads);
            for (e, &(s, t)) in rel.edges.iter().enumerate() {
                let (s, t) = (s as usize, t as usize);
                for a in 0..heads {
                    let w = weights[r][e * heads + a];
                    let gblk = head_block(g, t, a, dk);
                    for (o, gv) in dmw.row_mut(s)[a * dk..(a + 1) * dk].iter_mut().zip(gblk) {
                        *o += w * gv;
                    }
                    let dlogit = w * (dw[r][e * heads + a] - wsum[t * heads + a]);
                    if dlogit == 0.0 {
                        continue;
                    }
                    let mu = prior[(0, a)];
                    let kblk = head_block(&kw[r], s, a, dk);
                    let qblk = head_block(q, t, a, dk);
                    let raw: f64 = kblk.iter().zip(qblk).map(|(x, y)| x * y).sum();
                    dprior.row_mut(0)[a] += dlogit * raw * scale;
                    let c = dlogit * mu * scale;
                    for p in 0..dk {
                        dkw.row_mut(s)[a * dk + p] += c * qblk[p];
                        dq.row_mut(t)[a * dk + p] += c * kblk[p];
                    }
                }
            }
            let (dkey, datt) = head_transform_back(self.value(rel.key), self.value(rel.att), &dkw, heads);
            let (dval, dmsg) = head_transform_back(self.value(rel.value), self.value(rel.msg), &dmw, heads);
            accumulate(grads, rel.key, dkey);
            accumulate(grads, rel.att, datt);
            accumulate(grads, rel.value, dval);
            accumulate(grads, rel.msg, dmsg);
            accumulate(grads, rel.prior, dprior);
        }
        accumulate(grads, query, dq);
    }
}

fn accumulate(grads: &mut [Option<Matrix>], id: NodeId, g: Matrix) {
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot => *slot = Some(g),
    }
}
