//! Cross-validation and the robustness sweeps built on it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::metrics::{argmax, auc, label_top1, mrr, ndcg_at_1, ranking};
use crate::error::{arg_err, dim_err, Result};
use crate::linalg::Matrix;
use crate::perf::{mask_random, perturb, PerformanceMatrix};
use crate::rng::{derive, seeded};
use crate::selector::Selector;

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_SPARSITIES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub mrr: f64,
    pub auc: f64,
    pub ndcg_at_1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphResult {
    pub graph: usize,
    pub fold: usize,
    /// Model indices, predicted best first.
    pub ranking: Vec<usize>,
    pub mrr: f64,
    /// `None` when every observed model ties for best.
    pub auc: Option<f64>,
    pub ndcg_at_1: f64,
    /// True best performance minus that of the predicted best model.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldResult {
    pub fold: usize,
    pub test_graphs: Vec<usize>,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalResult {
    pub selector: String,
    pub folds: Vec<FoldResult>,
    pub graphs: Vec<GraphResult>,
    /// Means over all evaluated test graphs (AUC over those where it is
    /// defined).
    pub mean: Metrics,
}

/// Seeded split of `0..n` into `folds` disjoint, sorted, near-equal parts.
pub fn fold_split(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || n < folds {
        return Err(arg_err(format!("cannot split {n} graphs into {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut out: Vec<Vec<usize>> = (0..folds)
        .map(|f| order[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect();
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

fn score_graph(scores: &[f64], truth: &PerformanceMatrix, i: usize) -> Result<Option<(Metrics, Option<f64>, f64)>> {
    let obs: Vec<usize> = (0..truth.n_models()).filter(|&j| truth.is_observed(i, j)).collect();
    if obs.is_empty() {
        return Ok(None);
    }
    let s: Vec<f64> = obs.iter().map(|&j| scores[j]).collect();
    let y: Vec<f64> = obs.iter().map(|&j| truth.values()[(i, j)]).collect();
    let labels = label_top1(&y)?;
    let r = mrr(&s, &labels)?;
    let a = if labels.iter().all(|&l| l) { None } else { Some(auc(&s, &labels)?) };
    let n = ndcg_at_1(&s, &y)?;
    let best = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gap = best - y[argmax(&s).unwrap_or(0)];
    Ok(Some((Metrics { mrr: r, auc: a.unwrap_or(0.0), ndcg_at_1: n }, a, gap)))
}

fn mean_metrics(graphs: &[GraphResult]) -> Metrics {
    let n = graphs.len().max(1) as f64;
    let aucs: Vec<f64> = graphs.iter().filter_map(|g| g.auc).collect();
    Metrics {
        mrr: graphs.iter().map(|g| g.mrr).sum::<f64>() / n,
        auc: if aucs.is_empty() { 0.0 } else { aucs.iter().sum::<f64>() / aucs.len() as f64 },
        ndcg_at_1: graphs.iter().map(|g| g.ndcg_at_1).sum::<f64>() / n,
    }
}

/// Graph-level k-fold cross-validation. Each fold fits on the training rows
/// of `p_fit` and scores every test graph against its row of `p_truth`
/// (observed entries only). Test rows are never passed to `fit`. A failing
/// fold is recorded and the remaining folds still run.
pub fn cross_validate(
    features: &Matrix,
    p_fit: &PerformanceMatrix,
    p_truth: &PerformanceMatrix,
    selector: &dyn Selector,
    folds: usize,
    seed: u64,
) -> Result<EvalResult> {
    let n = features.rows();
    if p_fit.n_graphs() != n || p_truth.n_graphs() != n || p_fit.n_models() != p_truth.n_models() {
        return Err(dim_err("features and performance matrices disagree in shape"));
    }
    let split = fold_split(n, folds, seed)?;
    let mut fold_results = Vec::with_capacity(folds);
    let mut graphs = Vec::new();
    for (f, test) in split.iter().enumerate() {
        let train: Vec<usize> = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
        let run = || -> Result<Vec<GraphResult>> {
            let fitted = selector.fit(&features.select_rows(&train), &p_fit.select_rows(&train))?;
            let mut out = Vec::new();
            for &i in test {
                let sheet = fitted.rank(features.row(i))?;
                if sheet.scores.len() != p_truth.n_models() || sheet.scores.iter().any(|s| !s.is_finite()) {
                    return Err(crate::Error::NonFinite(format!("scores for graph {i}")));
                }
                if let Some((m, a, gap)) = score_graph(&sheet.scores, p_truth, i)? {
                    out.push(GraphResult {
                        graph: i,
                        fold: f,
                        ranking: ranking(&sheet.scores),
                        mrr: m.mrr,
                        auc: a,
                        ndcg_at_1: m.ndcg_at_1,
                        gap,
                    });
                }
            }
            Ok(out)
        };
        match run() {
            Ok(g) => {
                fold_results.push(FoldResult { fold: f, test_graphs: test.clone(), metrics: Some(mean_metrics(&g)), error: None });
                graphs.extend(g);
            }
            Err(e) => {
                fold_results.push(FoldResult { fold: f, test_graphs: test.clone(), metrics: None, error: Some(e.to_string()) })
            }
        }
    }
    Ok(EvalResult { selector: selector.name(), folds: fold_results, mean: mean_metrics(&graphs), graphs })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    /// Sparsity or perturbation rate.
    pub setting: f64,
    pub result: EvalResult,
}

/// Seed for one sweep setting; depends on the setting value, not its
/// position in the list, so cells can be run separately.
pub fn setting_seed(seed: u64, sweep: u64, setting: f64) -> u64 {
    derive(derive(seed, sweep), setting.to_bits())
}

/// For each sparsity, masks that share of `P` (seeded per setting), fits
/// every selector on the masked matrix and evaluates against the full one.
pub fn sparsity_sweep(
    features: &Matrix,
    p: &PerformanceMatrix,
    selectors: &[&dyn Selector],
    sparsities: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &s in sparsities {
        let masked = mask_random(p, s, setting_seed(seed, 1, s))?;
        for sel in selectors {
            rows.push(SweepRow { setting: s, result: cross_validate(features, &masked, p, *sel, folds, seed)? });
        }
    }
    Ok(rows)
}

/// For each rate, perturbs `P` (seeded per setting) and cross-validates
/// every selector on the perturbed matrix.
pub fn perturbation_sweep(
    features: &Matrix,
    p: &PerformanceMatrix,
    selectors: &[&dyn Selector],
    rates: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &r in rates {
        let noisy = perturb(p, r, setting_seed(seed, 2, r))?;
        for sel in selectors {
            rows.push(SweepRow { setting: r, result: cross_validate(features, &noisy, &noisy, *sel, folds, seed)? });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapSummary {
    pub gaps: Vec<(usize, f64)>,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Per-graph gap between the best and the predicted-best performance.
pub fn best_gap_report(result: &EvalResult) -> GapSummary {
    let gaps: Vec<(usize, f64)> = result.graphs.iter().map(|g| (g.graph, g.gap)).collect();
    let mut sorted: Vec<f64> = gaps.iter().map(|g| g.1).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return GapSummary { gaps, mean: 0.0, median: 0.0, q1: 0.0, q3: 0.0 };
    }
    let q = |p| crate::features::stats::quantile_sorted(&sorted, p);
    GapSummary {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        median: q(0.5),
        q1: q(0.25),
        q3: q(0.75),
        gaps,
    }
}
