//! The meta-learner: graph embeddings from the G-M network, performance
//! estimates as embedding dot products, and a listwise top-1 loss.

mod model;
pub mod tape;
mod train;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use model::{embed, Layout, RelParam, TypeParam};
pub use train::{compare_gradients, gradient_check, loss_and_gradients, train, TinyInstance, TrainingHistory};

use crate::error::{dim_err, Error, Result};
use crate::features::SCHEMA_VERSION;
use crate::gmnet::{extend_with_test, GmNetwork};
use crate::linalg::{dot, Matrix};
use crate::perf::{FactorEstimator, PerformanceMatrix, Standardizer};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LearnerConfig {
    /// Embedding and factor size. Clamped to the number of models and of
    /// training graphs.
    pub k: usize,
    pub layers: usize,
    pub heads: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub top_k: usize,
    pub ridge_lambda: f64,
    /// Share of graphs held out to pick the stopping epoch.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            k: 32,
            layers: 2,
            heads: 4,
            lr: 7.5e-4,
            weight_decay: 1e-4,
            max_epochs: 500,
            patience: 25,
            top_k: crate::gmnet::DEFAULT_TOP_K,
            ridge_lambda: crate::perf::DEFAULT_RIDGE_LAMBDA,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Everything needed to select a model for a new graph.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetaLearnerState {
    pub schema_version: u32,
    pub config: LearnerConfig,
    pub layout: Layout,
    /// Z-scoring of raw meta-features, fit on the training graphs.
    pub standardizer: Standardizer,
    /// Maps standardized meta-features to latent graph factors.
    pub phi: FactorEstimator,
    pub network: GmNetwork,
    pub params: Vec<Matrix>,
    pub model_ids: Vec<String>,
    pub history: TrainingHistory,
}

/// Estimated performances of every model on one graph.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreSheet {
    pub scores: Vec<f64>,
    pub model_ids: Vec<String>,
}

impl ScoreSheet {
    /// Model indices by descending score, ties to the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        crate::eval::ranking(&self.scores)
    }

    pub fn best(&self) -> Option<usize> {
        self.ranking().first().copied()
    }
}

/// `W · [m; φ(m)]`
pub fn graph_input_feature(m: &[f64], phi: &FactorEstimator, w: &Matrix) -> Result<Vec<f64>> {
    let mut x = m.to_vec();
    x.extend(phi.predict(m)?);
    if w.cols() != x.len() {
        return Err(dim_err(format!("W has {} columns, input has length {}", w.cols(), x.len())));
    }
    w.matvec(&x)
}

pub fn estimate_performance(g_embed: &[f64], m_embed: &[f64]) -> f64 {
    dot(g_embed, m_embed)
}

/// Top-1 probabilities: a max-shifted softmax.
pub fn top1_probability(scores: &[f64]) -> Vec<f64> {
    tape::masked_softmax(scores, &alloc::vec![true; scores.len()])
}

fn row_cross_entropy(target: &[f64], scores: &[f64], mask: &[bool]) -> f64 {
    if !mask.iter().any(|&m| m) {
        return 0.0;
    }
    let q = tape::masked_softmax(target, mask);
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + libm::log(
            scores
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| libm::exp(v - max))
                .sum::<f64>(),
        );
    let mut loss = 0.0;
    for j in 0..scores.len() {
        if mask[j] && q[j] > 0.0 {
            loss -= q[j] * (scores[j] - lse);
        }
    }
    loss
}

pub(crate) fn top1_loss_masked(target: &Matrix, scores: &Matrix, mask: &[bool]) -> f64 {
    let m = target.cols();
    (0..target.rows())
        .map(|i| row_cross_entropy(target.row(i), scores.row(i), &mask[i * m..(i + 1) * m]))
        .sum()
}

/// Listwise loss between true and estimated performances, over observed
/// entries only. Rows without observations contribute nothing.
pub fn top1_loss(p_true: &PerformanceMatrix, p_hat: &Matrix) -> Result<f64> {
    if p_hat.shape() != p_true.values().shape() {
        return Err(dim_err(format!(
            "estimates are {:?}, performance matrix is {:?}",
            p_hat.shape(),
            p_true.values().shape()
        )));
    }
    Ok(top1_loss_masked(p_true.values(), p_hat, p_true.mask()))
}

impl MetaLearnerState {
    pub fn feature_dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn n_models(&self) -> usize {
        self.layout.n_models
    }

    /// Graph node inputs `[z; φ(z)]` for the rows of the network.
    pub(crate) fn network_inputs(net: &GmNetwork) -> Matrix {
        let (n, d) = net.meta.shape();
        let k = net.u_hat.cols();
        Matrix::from_fn(n, d + k, |i, j| if j < d { net.meta[(i, j)] } else { net.u_hat[(i, j - d)] })
    }

    /// Embeddings of all network nodes under the current parameters.
    pub fn embed_all(&self) -> Result<(Matrix, Matrix)> {
        embed(&self.layout, &self.params, &Self::network_inputs(&self.network), &self.network)
    }

    /// Scores every model for a graph with raw meta-features `m_test`.
    pub fn score(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        if m_test.len() != self.feature_dim() {
            return Err(Error::Dimension(format!(
                "meta-feature vector has length {}, model expects {}",
                m_test.len(),
                self.feature_dim()
            )));
        }
        if m_test.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("meta-feature vector".into()));
        }
        let z = self.standardizer.transform_row(m_test);
        let u = self.phi.predict(&z)?;
        let net = extend_with_test(&self.network, &z, &u)?;
        let (zg, zm) = embed(&self.layout, &self.params, &Self::network_inputs(&net), &net)?;
        let t = zg.row(net.n_graphs() - 1);
        let scores = (0..zm.rows()).map(|j| estimate_performance(t, zm.row(j))).collect();
        Ok(ScoreSheet { scores, model_ids: self.model_ids.clone() })
    }

    pub fn check_schema(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaMismatch { expected: SCHEMA_VERSION, found: self.schema_version });
        }
        Ok(())
    }
}

/// Scores all models for one graph and returns the sheet; its
/// [`ScoreSheet::ranking`] puts the selected model first.
pub fn select_model(state: &MetaLearnerState, m_test: &[f64]) -> Result<ScoreSheet> {
    state.check_schema()?;
    state.score(m_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn probabilities() {
        assert_eq!(top1_probability(&[1.0; 4]), vec![0.25; 4]);
        let p = top1_probability(&[0.0, libm::log(2.0)]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
        let a = top1_probability(&[0.3, -2.0, 5.0]);
        let b = top1_probability(&[100.3, 98.0, 105.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_cases() {
        let t = Matrix::from_rows(&[[0.2, 0.5, 0.9]]).unwrap();
        let p = PerformanceMatrix::full(t.clone()).unwrap();
        let q = top1_probability(t.row(0));
        let entropy: f64 = q.iter().map(|v| -v * libm::log(*v)).sum();
        let same = Matrix::from_rows(&[[1.2, 1.5, 1.9]]).unwrap();
        assert!((top1_loss(&p, &same).unwrap() - entropy).abs() < 1e-12);
        let other = Matrix::from_rows(&[[0.9, 0.5, 0.2]]).unwrap();
        assert!(top1_loss(&p, &other).unwrap() > entropy);

        let single = p.with_mask(vec![false, true, false]).unwrap();
        assert_eq!(top1_loss(&single, &other).unwrap(), 0.0);
        let none = p.with_mask(vec![false; 3]).unwrap();
        assert_eq!(top1_loss(&none, &other).unwrap(), 0.0);
        assert!(top1_loss(&p, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn dot_estimate() {
        assert_eq!(estimate_performance(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert_eq!(estimate_performance(&[0.6, 0.8], &[0.6, 0.8]), 1.0);
    }
}
