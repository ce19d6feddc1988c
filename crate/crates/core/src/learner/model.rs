//! Parameter layout and forward pass of the attentive aggregator `f`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use super::tape::{NodeId, RelInput, Tape};
use crate::error::{dim_err, Result};
use crate::gmnet::{GmNetwork, NodeType, Relation};
use crate::linalg::Matrix;
use crate::rng::Rng;

const TYPE_SLOTS: usize = 5;
const REL_SLOTS: usize = 3;
const PER_LAYER: usize = 2 * TYPE_SLOTS + 5 * REL_SLOTS;

/// Shapes and positions of every parameter tensor.
///
/// Tensor 0 is the input projection `W` (`k x (d+k)`), tensor 1 the model
/// factors `V` (`m x k`). Each layer then holds, per node type, key, query,
/// value and output projections (`k x k`) and a scalar residual gate, and per
/// relation the stacked per-head attention and message transforms
/// (`k x k/h`) and a `1 x h` row of priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layout {
    pub input_dim: usize,
    pub n_models: usize,
    pub k: usize,
    pub heads: usize,
    pub layers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeParam {
    Key,
    Query,
    Value,
    Out,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelParam {
    Att,
    Msg,
    Prior,
}

fn type_slot(t: NodeType) -> usize {
    match t {
        NodeType::Graph => 0,
        NodeType::Model => 1,
    }
}

impl Layout {
    pub fn head_dim(&self) -> usize {
        self.k / self.heads
    }

    pub fn len(&self) -> usize {
        2 + self.layers * PER_LAYER
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub const W: usize = 0;
    pub const V: usize = 1;

    pub fn type_param(&self, layer: usize, t: NodeType, p: TypeParam) -> usize {
        2 + layer * PER_LAYER + type_slot(t) * TYPE_SLOTS + p as usize
    }

    pub fn rel_param(&self, layer: usize, r: Relation, p: RelParam) -> usize {
        2 + layer * PER_LAYER + 2 * TYPE_SLOTS + r.index() * REL_SLOTS + p as usize
    }

    /// True for the residual gates and relation priors, which start at 1.
    fn is_scale(&self, idx: usize) -> bool {
        if idx < 2 {
            return false;
        }
        let off = (idx - 2) % PER_LAYER;
        if off < 2 * TYPE_SLOTS {
            off % TYPE_SLOTS == TypeParam::Skip as usize
        } else {
            (off - 2 * TYPE_SLOTS) % REL_SLOTS == RelParam::Prior as usize
        }
    }

    pub fn shape(&self, idx: usize) -> (usize, usize) {
        match idx {
            Self::W => (self.k, self.input_dim),
            Self::V => (self.n_models, self.k),
            _ => {
                let off = (idx - 2) % PER_LAYER;
                if off < 2 * TYPE_SLOTS {
                    if self.is_scale(idx) {
                        (1, 1)
                    } else {
                        (self.k, self.k)
                    }
                } else if self.is_scale(idx) {
                    (1, self.heads)
                } else {
                    (self.k, self.head_dim())
                }
            }
        }
    }

    pub fn name(&self, idx: usize) -> String {
        match idx {
            Self::W => "w".into(),
            Self::V => "v".into(),
            _ => {
                let layer = (idx - 2) / PER_LAYER;
                let off = (idx - 2) % PER_LAYER;
                if off < 2 * TYPE_SLOTS {
                    let t = if off / TYPE_SLOTS == 0 { "graph" } else { "model" };
                    let p = ["key", "query", "value", "out", "skip"][off % TYPE_SLOTS];
                    format!("layer{layer}.{t}.{p}")
                } else {
                    let r = Relation::ALL[(off - 2 * TYPE_SLOTS) / REL_SLOTS].name();
                    let p = ["att", "msg", "prior"][(off - 2 * TYPE_SLOTS) % REL_SLOTS];
                    format!("layer{layer}.{r}.{p}")
                }
            }
        }
    }

    /// Seeded initialization: Glorot-uniform matrices, priors at 1, residual
    /// gates at 1. `V` is set to `v`.
    pub fn init(&self, v: &Matrix, rng: &mut Rng) -> Result<Vec<Matrix>> {
        if v.shape() != (self.n_models, self.k) {
            return Err(dim_err(format!("V is {:?}, layout expects {:?}", v.shape(), (self.n_models, self.k))));
        }
        let mut out = Vec::with_capacity(self.len());
        for idx in 0..self.len() {
            let (r, c) = self.shape(idx);
            let m = if idx == Self::V {
                v.clone()
            } else if self.is_scale(idx) {
                Matrix::filled(r, c, 1.0)
            } else {
                let a = libm::sqrt(6.0 / (r + c) as f64);
                Matrix::from_fn(r, c, |_, _| rng.gen_range(-a..a))
            };
            out.push(m);
        }
        Ok(out)
    }

    pub fn check(&self, params: &[Matrix]) -> Result<()> {
        if self.k == 0 || self.heads == 0 || !self.k.is_multiple_of(self.heads) {
            return Err(dim_err(format!("k = {} is not divisible by {} heads", self.k, self.heads)));
        }
        if params.len() != self.len() {
            return Err(dim_err(format!("{} parameter tensors, layout expects {}", params.len(), self.len())));
        }
        for (i, p) in params.iter().enumerate() {
            if p.shape() != self.shape(i) {
                return Err(dim_err(format!("{} is {:?}, expected {:?}", self.name(i), p.shape(), self.shape(i))));
            }
        }
        Ok(())
    }
}

/// Edges of a network grouped by relation, ready for the tape.
pub(crate) fn relation_edges(net: &GmNetwork) -> [Vec<(u32, u32)>; 5] {
    let mut out: [Vec<(u32, u32)>; 5] = Default::default();
    for e in &net.edges {
        out[e.relation.index()].push((e.src as u32, e.dst as u32));
    }
    out
}

/// Records the forward pass on `tape`. Returns the leaf ids of the parameters
/// and the final graph and model embeddings.
pub(crate) fn forward(
    tape: &mut Tape,
    layout: &Layout,
    params: &[Matrix],
    graph_inputs: &Matrix,
    edges: &[Vec<(u32, u32)>; 5],
) -> Result<(Vec<NodeId>, NodeId, NodeId)> {
    layout.check(params)?;
    if graph_inputs.cols() != layout.input_dim {
        return Err(dim_err(format!(
            "graph inputs have width {}, layout expects {}",
            graph_inputs.cols(),
            layout.input_dim
        )));
    }
    let n_graphs = graph_inputs.rows();
    let leaves: Vec<NodeId> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let x = tape.leaf(graph_inputs.clone());
    let mut h = [tape.matmul_bt(x, leaves[Layout::W]), leaves[Layout::V]];
    let counts = [n_graphs, layout.n_models];
    for e in edges.iter().zip(Relation::ALL) {
        let (src_n, dst_n) = (counts[type_slot(e.1.source_type())], counts[type_slot(e.1.target_type())]);
        if e.0.iter().any(|&(s, d)| s as usize >= src_n || d as usize >= dst_n) {
            return Err(dim_err(format!("{} edge outside the node set", e.1.name())));
        }
    }
    for layer in 0..layout.layers {
        let mut key = [0; 2];
        let mut query = [0; 2];
        let mut value = [0; 2];
        for t in [NodeType::Graph, NodeType::Model] {
            let s = type_slot(t);
            key[s] = tape.matmul(h[s], leaves[layout.type_param(layer, t, TypeParam::Key)]);
            query[s] = tape.matmul(h[s], leaves[layout.type_param(layer, t, TypeParam::Query)]);
            value[s] = tape.matmul(h[s], leaves[layout.type_param(layer, t, TypeParam::Value)]);
        }
        let mut next = h;
        for t in [NodeType::Graph, NodeType::Model] {
            let s = type_slot(t);
            let rels: Vec<RelInput> = Relation::ALL
                .iter()
                .filter(|r| r.target_type() == t)
                .map(|&r| {
                    let src = type_slot(r.source_type());
                    RelInput {
                        key: key[src],
                        value: value[src],
                        att: leaves[layout.rel_param(layer, r, RelParam::Att)],
                        msg: leaves[layout.rel_param(layer, r, RelParam::Msg)],
                        prior: leaves[layout.rel_param(layer, r, RelParam::Prior)],
                        edges: edges[r.index()].clone(),
                    }
                })
                .collect();
            let agg = tape.rel_attention(query[s], counts[s], rels, layout.heads);
            let act = tape.gelu(agg);
            let proj = tape.matmul(act, leaves[layout.type_param(layer, t, TypeParam::Out)]);
            next[s] = tape.mix(proj, h[s], leaves[layout.type_param(layer, t, TypeParam::Skip)]);
        }
        h = next;
    }
    Ok((leaves, h[0], h[1]))
}

/// Final embeddings of all graph and model nodes.
pub fn embed(layout: &Layout, params: &[Matrix], graph_inputs: &Matrix, net: &GmNetwork) -> Result<(Matrix, Matrix)> {
    let mut tape = Tape::new();
    let (_, zg, zm) = forward(&mut tape, layout, params, graph_inputs, &relation_edges(net))?;
    Ok((tape.value(zg).clone(), tape.value(zm).clone()))
}
