//! Evaluation-free model selection for graph learning.
//!
//! Given a corpus of graphs with (possibly sparse) observed performances of a
//! fixed set of models, this crate learns to pick the best model for an unseen
//! graph from its structure alone:
//!
//! - [`graph`]: simple undirected graphs and edge-list ingestion.
//! - [`features`]: fixed-length meta-graph feature vectors.
//! - [`perf`]: performance matrices, masked NMF and the feature-to-factor ridge estimator.
//! - [`gmnet`]: the five-relation graph/model similarity network.
//! - [`learner`]: relation-aware attentive meta-learner trained with a top-1 listwise loss.
//! - [`baselines`]: comparison meta-learners sharing the same selector interface.
//! - [`eval`]: ranking metrics, cross-validation, sweeps and the planted synthetic corpus.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, parallelism and
//! the command-line driver live in the companion `metagl` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod eval;
pub mod features;
pub mod gmnet;
pub mod graph;
pub mod learner;
pub mod linalg;
pub mod perf;
pub mod rng;
pub mod selector;

pub use error::{Error, Result};
pub use graph::Graph;
pub use linalg::Matrix;
