//! The interface shared by the meta-learner and every baseline.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::baselines;
use crate::error::Result;
use crate::learner::{self, LearnerConfig, MetaLearnerState, ScoreSheet};
use crate::linalg::Matrix;
use crate::perf::PerformanceMatrix;

/// A fitted selector: scores every model for one graph's raw meta-features.
pub trait Fitted: Send + Sync {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet>;
}

/// Something that can be fit on meta-train data.
pub trait Selector {
    fn name(&self) -> String;
    fn fit(&self, features: &Matrix, p: &PerformanceMatrix) -> Result<Box<dyn Fitted>>;
}

impl Fitted for MetaLearnerState {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        learner::select_model(self, m_test)
    }
}

/// Every built-in selector with its settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SelectorKind {
    MetaGl(LearnerConfig),
    Random { seed: u64 },
    GbAvgPerf,
    GbAvgRank,
    /// `n_clusters = None` uses the ceiling of the square root of the number
    /// of training graphs.
    Isac { n_clusters: Option<usize>, seed: u64 },
    ArgoSmart,
    Surrogate { lambda: f64 },
    Alors { k: usize, lambda: f64, seed: u64 },
}

impl SelectorKind {
    /// All seven baselines plus the meta-learner with default settings.
    pub fn defaults(seed: u64) -> Vec<SelectorKind> {
        let lambda = crate::perf::DEFAULT_RIDGE_LAMBDA;
        alloc::vec![
            SelectorKind::MetaGl(LearnerConfig { seed, ..LearnerConfig::default() }),
            SelectorKind::Random { seed },
            SelectorKind::GbAvgPerf,
            SelectorKind::GbAvgRank,
            SelectorKind::Isac { n_clusters: None, seed },
            SelectorKind::ArgoSmart,
            SelectorKind::Surrogate { lambda },
            SelectorKind::Alors { k: 32, lambda, seed },
        ]
    }

    /// Parses a selector name, using default settings and `seed`.
    pub fn from_name(name: &str, seed: u64) -> Option<SelectorKind> {
        SelectorKind::defaults(seed).into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

impl Selector for SelectorKind {
    fn name(&self) -> String {
        match self {
            SelectorKind::MetaGl(_) => "metagl",
            SelectorKind::Random { .. } => "random",
            SelectorKind::GbAvgPerf => "gb-avgperf",
            SelectorKind::GbAvgRank => "gb-avgrank",
            SelectorKind::Isac { .. } => "isac",
            SelectorKind::ArgoSmart => "argosmart",
            SelectorKind::Surrogate { .. } => "surrogate",
            SelectorKind::Alors { .. } => "alors",
        }
        .into()
    }

    fn fit(&self, features: &Matrix, p: &PerformanceMatrix) -> Result<Box<dyn Fitted>> {
        Ok(match self {
            SelectorKind::MetaGl(cfg) => Box::new(learner::train(features, p, cfg)?),
            SelectorKind::Random { seed } => Box::new(baselines::RandomSelector::new(p, *seed)),
            SelectorKind::GbAvgPerf => Box::new(baselines::fixed_ranking(p, baselines::gb_avgperf(p)?)),
            SelectorKind::GbAvgRank => Box::new(baselines::fixed_ranking(p, baselines::gb_avgrank(p)?)),
            SelectorKind::Isac { n_clusters, seed } => Box::new(baselines::Isac::fit(features, p, *n_clusters, *seed)?),
            SelectorKind::ArgoSmart => Box::new(baselines::ArgoSmart::fit(features, p)?),
            SelectorKind::Surrogate { lambda } => Box::new(baselines::Surrogate::fit(features, p, *lambda)?),
            SelectorKind::Alors { k, lambda, seed } => Box::new(baselines::Alors::fit(features, p, *k, *lambda, *seed)?),
        })
    }
}
