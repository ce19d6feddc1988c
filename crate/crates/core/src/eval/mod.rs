//! Evaluation: ranking metrics, cross-validation and robustness sweeps, and
//! the planted synthetic corpus.

pub mod cv;
pub mod metrics;
pub mod synth;

pub use cv::{
    best_gap_report, cross_validate, fold_split, perturbation_sweep, setting_seed, sparsity_sweep, EvalResult, FoldResult,
    GapSummary, GraphResult, Metrics, SweepRow, DEFAULT_FOLDS, DEFAULT_SPARSITIES,
};
pub use metrics::{auc, label_top1, mrr, ndcg_at_1, ranking};
pub use synth::{generate_synthetic_corpus, SyntheticCorpus};
