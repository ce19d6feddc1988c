//! Run configuration: a TOML file with sections, overridable by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use metagl_core::eval::DEFAULT_SPARSITIES;
use metagl_core::learner::LearnerConfig;
use metagl_core::selector::SelectorKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for extraction and sweeps; 0 lets the pool decide.
    pub threads: usize,
    pub paths: Paths,
    pub learner: LearnerSection,
    pub eval: EvalSection,
    pub synthetic: SyntheticSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub graph_dir: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub performance: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSection {
    pub k: usize,
    pub layers: usize,
    pub heads: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub top_k: usize,
    pub ridge_lambda: f64,
    pub val_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Generate the planted corpus instead of reading files.
    pub synthetic: bool,
    pub folds: usize,
    pub selectors: Vec<String>,
    pub sparsities: Vec<f64>,
    pub perturbation_rates: Vec<f64>,
    /// Defaults to the ceiling of the square root of the training set size.
    pub isac_clusters: Option<usize>,
    pub alors_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    pub n_graphs: usize,
    pub families: usize,
    pub models: usize,
    pub noise: f64,
}


impl Default for Paths {
    fn default() -> Self {
        Paths { graph_dir: None, features: None, performance: None, bundle: None, output_dir: PathBuf::from("out") }
    }
}

impl Default for LearnerSection {
    fn default() -> Self {
        let d = LearnerConfig::default();
        LearnerSection {
            k: d.k,
            layers: d.layers,
            heads: d.heads,
            lr: d.lr,
            weight_decay: d.weight_decay,
            max_epochs: d.max_epochs,
            patience: d.patience,
            top_k: d.top_k,
            ridge_lambda: d.ridge_lambda,
            val_fraction: d.val_fraction,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            synthetic: false,
            folds: metagl_core::eval::DEFAULT_FOLDS,
            selectors: SelectorKind::defaults(0).iter().map(|k| {
                use metagl_core::selector::Selector;
                k.name()
            }).collect(),
            sparsities: DEFAULT_SPARSITIES.to_vec(),
            perturbation_rates: vec![0.0, 0.1, 0.2, 0.5],
            isac_clusters: None,
            alors_k: 32,
        }
    }
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection { n_graphs: 60, families: 3, models: 8, noise: 0.05 }
    }
}

/// The parts of a configuration that determine results; paths and the thread
/// count are excluded so the same run written elsewhere hashes the same.
#[derive(Serialize)]
struct HashView<'a> {
    seed: u64,
    learner: &'a LearnerSection,
    eval: &'a EvalSection,
    synthetic: &'a SyntheticSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the result-determining fields.
    pub fn hash(&self) -> String {
        let view = HashView { seed: self.seed, learner: &self.learner, eval: &self.eval, synthetic: &self.synthetic };
        let json = serde_json::to_vec(&view).expect("configuration serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let l = &self.learner;
        if l.k == 0 || l.k > 1024 {
            bail!("learner.k must be in 1..=1024");
        }
        if l.layers > 8 {
            bail!("learner.layers must be at most 8");
        }
        if l.heads == 0 || l.heads > l.k {
            bail!("learner.heads must be in 1..=k");
        }
        if !(l.lr > 0.0 && l.lr <= 1.0) {
            bail!("learner.lr must be in (0, 1]");
        }
        if !(l.weight_decay >= 0.0 && l.weight_decay.is_finite()) {
            bail!("learner.weight_decay must be a non-negative number");
        }
        if l.max_epochs > 100_000 {
            bail!("learner.max_epochs must be at most 100000");
        }
        if l.patience == 0 {
            bail!("learner.patience must be at least 1");
        }
        if l.top_k == 0 {
            bail!("learner.top_k must be at least 1");
        }
        if !(l.ridge_lambda > 0.0 && l.ridge_lambda.is_finite()) {
            bail!("learner.ridge_lambda must be positive");
        }
        if !(0.0..=0.5).contains(&l.val_fraction) {
            bail!("learner.val_fraction must be in [0, 0.5]");
        }
        let e = &self.eval;
        if e.folds < 2 {
            bail!("eval.folds must be at least 2");
        }
        if e.selectors.is_empty() {
            bail!("eval.selectors is empty");
        }
        for s in &e.selectors {
            if SelectorKind::from_name(s, 0).is_none() {
                bail!("unknown selector {s:?}");
            }
        }
        if e.sparsities.iter().any(|s| !(0.0..1.0).contains(s)) {
            bail!("eval.sparsities must lie in [0, 1)");
        }
        if e.perturbation_rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            bail!("eval.perturbation_rates must be non-negative");
        }
        if e.isac_clusters == Some(0) {
            bail!("eval.isac_clusters must be at least 1");
        }
        if e.alors_k == 0 {
            bail!("eval.alors_k must be at least 1");
        }
        let s = &self.synthetic;
        if !(1..=3).contains(&s.families) {
            bail!("synthetic.families must be 1, 2 or 3");
        }
        if s.models < s.families {
            bail!("synthetic.models must be at least synthetic.families");
        }
        if s.n_graphs < s.families * e.folds {
            bail!("synthetic.n_graphs must be at least families x folds");
        }
        if !(0.0..=1.0).contains(&s.noise) {
            bail!("synthetic.noise must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn learner_config(&self) -> LearnerConfig {
        let l = &self.learner;
        LearnerConfig {
            k: l.k,
            layers: l.layers,
            heads: l.heads,
            lr: l.lr,
            weight_decay: l.weight_decay,
            max_epochs: l.max_epochs,
            patience: l.patience,
            top_k: l.top_k,
            ridge_lambda: l.ridge_lambda,
            val_fraction: l.val_fraction,
            seed: self.seed,
        }
    }

    pub fn selectors(&self) -> Vec<SelectorKind> {
        let lambda = self.learner.ridge_lambda;
        self.eval
            .selectors
            .iter()
            .filter_map(|name| {
                SelectorKind::from_name(name, self.seed).map(|kind| match kind {
                    SelectorKind::MetaGl(_) => SelectorKind::MetaGl(self.learner_config()),
                    SelectorKind::Isac { seed, .. } => SelectorKind::Isac { n_clusters: self.eval.isac_clusters, seed },
                    SelectorKind::Surrogate { .. } => SelectorKind::Surrogate { lambda },
                    SelectorKind::Alors { seed, .. } => SelectorKind::Alors { k: self.eval.alors_k, lambda, seed },
                    other => other,
                })
            })
            .collect()
    }

    pub fn features_path(&self) -> PathBuf {
        self.paths.features.clone().unwrap_or_else(|| self.paths.output_dir.join("features.csv"))
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.paths.bundle.clone().unwrap_or_else(|| self.paths.output_dir.join("model.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(c.selectors().len(), 8);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("sed = 3").is_err());
        assert!(RunConfig::parse("[learner]\nkk = 3").is_err());
        let c = RunConfig::parse("seed = 3\n[learner]\nk = 16").unwrap();
        assert_eq!((c.seed, c.learner.k, c.learner.layers), (3, 16, 2));
    }

    #[test]
    fn ranges_checked() {
        let mut c = RunConfig::default();
        c.learner.lr = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.eval.selectors = vec!["nope".into()];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.eval.sparsities = vec![1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.paths.output_dir = "elsewhere".into();
        b.threads = 3;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
