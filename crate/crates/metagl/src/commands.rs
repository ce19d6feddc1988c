//! The four operator commands plus corpus generation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use metagl_core::eval::{
    best_gap_report, cross_validate, generate_synthetic_corpus, setting_seed, EvalResult, Metrics,
};
use metagl_core::learner::{select_model, train};
use metagl_core::perf::{mask_random, perturb, PerformanceMatrix};
use metagl_core::selector::{Selector, SelectorKind};
use metagl_core::Matrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{fail, Categorize, CmdResult, FailureKind};
use crate::extract::{extract_files, extract_graph, extract_graphs, graph_files, graph_id, load_graph};
use crate::formats::{self, header_line, FeatureTable};
use crate::logging::log;

pub fn cmd_features(cfg: &RunConfig) -> CmdResult<Vec<crate::extract::FeatureRow>> {
    let dir = cfg
        .paths
        .graph_dir
        .clone()
        .ok_or_else(|| fail(FailureKind::Config, "paths.graph_dir (or --graphs) is required"))?;
    let files = graph_files(&dir).kind(FailureKind::Data)?;
    let (rows, failed) = extract_files(&files).kind(FailureKind::Data)?;
    for r in &rows {
        log("graph", &[("id", &r.id), ("nodes", &r.nodes), ("edges", &r.edges), ("seconds", &r.seconds)]);
    }
    for (p, e) in &failed {
        log("skipped", &[("file", &p.display()), ("error", &format!("{e:#}"))]);
    }
    let out = cfg.features_path();
    formats::write_feature_csv(&out, &rows, &cfg.hash()).kind(FailureKind::Runtime)?;
    formats::write_timing_csv(&formats::timing_path(&out), &rows).kind(FailureKind::Runtime)?;
    log("features", &[("graphs", &rows.len()), ("skipped", &failed.len()), ("output", &out.display())]);
    if !failed.is_empty() {
        return Err(fail(FailureKind::Data, format!("{} graph file(s) could not be read", failed.len())));
    }
    Ok(rows)
}

fn load_training_data(cfg: &RunConfig) -> CmdResult<(FeatureTable, PerformanceMatrix)> {
    let perf_path = cfg
        .paths
        .performance
        .clone()
        .ok_or_else(|| fail(FailureKind::Config, "paths.performance (or --perf) is required"))?;
    let features = formats::read_feature_csv(&cfg.features_path()).kind(FailureKind::Data)?;
    let p = formats::read_perf_csv(&perf_path).kind(FailureKind::Data)?;
    let p = formats::align(&features, &p).kind(FailureKind::Data)?;
    Ok((features, p))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: PathBuf,
    pub log: PathBuf,
    pub epochs: usize,
    pub best_epoch: usize,
}

pub fn train_log_path(bundle: &Path) -> PathBuf {
    bundle.with_extension("log.csv")
}

pub fn cmd_train(cfg: &RunConfig) -> CmdResult<TrainOutcome> {
    let (features, p) = load_training_data(cfg)?;
    let start = Instant::now();
    let state = train(&features.values, &p, &cfg.learner_config()).kind(FailureKind::Runtime)?;
    let h = &state.history;
    let hash = cfg.hash();
    let bundle = cfg.bundle_path();
    formats::save_bundle(&bundle, &state, &hash).kind(FailureKind::Runtime)?;

    let mut text = header_line("metagl-train-log", &hash, &[]);
    text.push_str("\nepoch,train_loss,val_mrr,val_loss\n");
    for e in 0..h.train_loss.len() {
        let opt = |v: Option<&f64>| v.map(|x| x.to_string()).unwrap_or_default();
        text.push_str(&format!("{e},{},{},{}\n", h.train_loss[e], opt(h.val_mrr.get(e)), opt(h.val_loss.get(e))));
    }
    let log_path = train_log_path(&bundle);
    formats::write_bytes(&log_path, text.as_bytes()).kind(FailureKind::Runtime)?;
    log(
        "train",
        &[
            ("graphs", &p.n_graphs()),
            ("models", &p.n_models()),
            ("epochs", &(h.train_loss.len() - 1)),
            ("best_epoch", &h.best_epoch),
            ("final_loss", h.train_loss.last().unwrap()),
            ("seconds", &start.elapsed().as_secs_f64()),
            ("bundle", &bundle.display()),
        ],
    );
    Ok(TrainOutcome { bundle, log: log_path, epochs: h.train_loss.len() - 1, best_epoch: h.best_epoch })
}

#[derive(Debug, Clone)]
pub struct Selection {
    /// `(model id, score)`, best first.
    pub ranking: Vec<(String, f64)>,
    pub text: String,
    pub feature_seconds: f64,
    pub predict_seconds: f64,
    pub total_seconds: f64,
}

pub fn cmd_select(cfg: &RunConfig, graph_path: &Path, out: Option<&Path>) -> CmdResult<Selection> {
    let bundle = formats::load_bundle(&cfg.bundle_path()).kind(FailureKind::Data)?;
    let start = Instant::now();
    let g = load_graph(graph_path).kind(FailureKind::Data)?;
    let row = extract_graph(graph_id(graph_path), &g).kind(FailureKind::Runtime)?;
    let feature_seconds = start.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let sheet = select_model(&bundle.state, &row.values).kind(FailureKind::Runtime)?;
    let predict_seconds = t1.elapsed().as_secs_f64();
    let total_seconds = start.elapsed().as_secs_f64();

    let ranking: Vec<(String, f64)> =
        sheet.ranking().into_iter().map(|j| (sheet.model_ids[j].clone(), sheet.scores[j])).collect();
    let mut text = header_line("metagl-selection", &bundle.config_hash, &[("graph", row.id.as_str())]);
    text.push_str("\nrank,model_id,score\n");
    for (r, (id, s)) in ranking.iter().enumerate() {
        text.push_str(&format!("{},{id},{s}\n", r + 1));
    }
    if let Some(out) = out {
        formats::write_bytes(out, text.as_bytes()).kind(FailureKind::Runtime)?;
    }
    log(
        "select",
        &[
            ("graph", &row.id),
            ("nodes", &row.nodes),
            ("edges", &row.edges),
            ("selected", &ranking[0].0),
            ("feature_seconds", &feature_seconds),
            ("predict_seconds", &predict_seconds),
            ("total_seconds", &total_seconds),
        ],
    );
    Ok(Selection { ranking, text, feature_seconds, predict_seconds, total_seconds })
}

/// Meta-features and performance for evaluation: the planted corpus or the
/// configured files.
pub fn load_corpus(cfg: &RunConfig) -> CmdResult<(Vec<String>, Matrix, PerformanceMatrix)> {
    if cfg.eval.synthetic {
        let s = &cfg.synthetic;
        let c = generate_synthetic_corpus(s.n_graphs, s.families, s.models, s.noise, cfg.seed)
            .kind(FailureKind::Config)?;
        let rows = extract_graphs(&c.graph_ids, &c.graphs).kind(FailureKind::Runtime)?;
        let values: Vec<Vec<f64>> = rows.into_iter().map(|r| r.values).collect();
        let m = Matrix::from_rows(&values).kind(FailureKind::Runtime)?;
        Ok((c.graph_ids, m, c.p))
    } else {
        let (features, p) = load_training_data(cfg)?;
        Ok((features.ids, features.values, p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Experiment {
    Cv,
    Sparsity(f64),
    Perturbation(f64),
}

impl Experiment {
    pub fn label(&self) -> String {
        match self {
            Experiment::Cv => "cv".into(),
            Experiment::Sparsity(s) => format!("sparsity={s}"),
            Experiment::Perturbation(r) => format!("perturbation={r}"),
        }
    }
}

pub struct Cell {
    pub selector: String,
    pub experiment: Experiment,
    pub result: Result<EvalResult, String>,
}

/// Runs one evaluation cell. Masks and perturbations are seeded by the
/// setting value, so a cell reproduces independently of the others.
pub fn run_cell(
    features: &Matrix,
    p: &PerformanceMatrix,
    kind: &SelectorKind,
    exp: Experiment,
    folds: usize,
    seed: u64,
) -> metagl_core::Result<EvalResult> {
    match exp {
        Experiment::Cv => cross_validate(features, p, p, kind, folds, seed),
        Experiment::Sparsity(s) => {
            let masked = mask_random(p, s, setting_seed(seed, 1, s))?;
            cross_validate(features, &masked, p, kind, folds, seed)
        }
        Experiment::Perturbation(r) => {
            let noisy = perturb(p, r, setting_seed(seed, 2, r))?;
            cross_validate(features, &noisy, &noisy, kind, folds, seed)
        }
    }
}

#[derive(Serialize)]
struct MetricRow<'a> {
    selector: &'a str,
    setting: String,
    mrr: f64,
    auc: f64,
    ndcg_at_1: f64,
    failed_folds: usize,
}

#[derive(Serialize)]
struct CvRow<'a> {
    selector: &'a str,
    mrr: f64,
    auc: f64,
    ndcg_at_1: f64,
    gap_mean: f64,
    gap_median: f64,
    gap_q1: f64,
    gap_q3: f64,
    failed_folds: usize,
}

#[derive(Serialize)]
struct Conventions {
    ndcg_gain: &'static str,
    auc_ties: &'static str,
    score_ties: &'static str,
    label_ties: &'static str,
    sparsity_truth: &'static str,
}

#[derive(Serialize)]
struct Summary<'a> {
    format: &'static str,
    schema_version: u32,
    config_hash: String,
    conventions: Conventions,
    graphs: usize,
    models: usize,
    synthetic: bool,
    folds: usize,
    cross_validation: Vec<CvRow<'a>>,
    sparsity: Vec<MetricRow<'a>>,
    perturbation: Vec<MetricRow<'a>>,
    /// Selectors by cross-validated MRR, best first.
    mrr_ranking: Vec<&'a str>,
    errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub results_csv: PathBuf,
    pub summary_json: PathBuf,
    pub cv: Vec<(String, Metrics)>,
}

pub fn cmd_evaluate(cfg: &RunConfig) -> CmdResult<EvaluateOutcome> {
    let start = Instant::now();
    let (ids, features, p) = load_corpus(cfg)?;
    let selectors = cfg.selectors();
    let mut experiments = vec![Experiment::Cv];
    experiments.extend(cfg.eval.sparsities.iter().map(|&s| Experiment::Sparsity(s)));
    experiments.extend(cfg.eval.perturbation_rates.iter().map(|&r| Experiment::Perturbation(r)));
    let jobs: Vec<(&SelectorKind, Experiment)> =
        selectors.iter().flat_map(|k| experiments.iter().map(move |&e| (k, e))).collect();
    let folds = cfg.eval.folds;
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(kind, exp)| {
            let t = Instant::now();
            let result = run_cell(&features, &p, kind, exp, folds, cfg.seed).map_err(|e| e.to_string());
            let name = kind.name();
            match &result {
                Ok(r) => log(
                    "cell",
                    &[("selector", &name), ("setting", &exp.label()), ("mrr", &r.mean.mrr), ("seconds", &t.elapsed().as_secs_f64())],
                ),
                Err(e) => log("cell_failed", &[("selector", &name), ("setting", &exp.label()), ("error", e)]),
            }
            Cell { selector: name, experiment: exp, result }
        })
        .collect();

    let hash = cfg.hash();
    let out_dir = &cfg.paths.output_dir;
    let results_csv = out_dir.join("results.csv");
    let summary_json = out_dir.join("summary.json");

    // long-format results
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["selector", "setting", "fold", "metric", "value"]).kind(FailureKind::Runtime)?;
    let mut errors = Vec::new();
    for c in &cells {
        let setting = c.experiment.label();
        match &c.result {
            Ok(r) => {
                let mut emit = |fold: &str, m: &Metrics| -> csv::Result<()> {
                    for (name, v) in [("mrr", m.mrr), ("auc", m.auc), ("ndcg_at_1", m.ndcg_at_1)] {
                        w.write_record([c.selector.as_str(), &setting, fold, name, &v.to_string()])?;
                    }
                    Ok(())
                };
                for f in &r.folds {
                    match (&f.metrics, &f.error) {
                        (Some(m), _) => emit(&f.fold.to_string(), m).kind(FailureKind::Runtime)?,
                        (None, Some(e)) => errors.push(format!("{} {} fold {}: {e}", c.selector, setting, f.fold)),
                        _ => {}
                    }
                }
                emit("all", &r.mean).kind(FailureKind::Runtime)?;
            }
            Err(e) => errors.push(format!("{} {}: {e}", c.selector, setting)),
        }
    }
    let mut results = header_line("metagl-results", &hash, &[]).into_bytes();
    results.push(b'\n');
    results.extend(w.into_inner().map_err(|e| e.into_error()).kind(FailureKind::Runtime)?);
    formats::write_bytes(&results_csv, &results).kind(FailureKind::Runtime)?;

    // per-graph predictions and gaps of the plain cross-validation
    let mut pw = csv::Writer::from_writer(Vec::new());
    pw.write_record(["selector", "graph_id", "fold", "ranking", "mrr", "auc", "ndcg_at_1", "gap"])
        .kind(FailureKind::Runtime)?;
    let mut cv_rows = Vec::new();
    let mut cv_metrics = Vec::new();
    let mut sparsity = Vec::new();
    let mut perturbation = Vec::new();
    for c in &cells {
        let Ok(r) = &c.result else { continue };
        let failed = r.folds.iter().filter(|f| f.error.is_some()).count();
        let row = MetricRow {
            selector: &c.selector,
            setting: c.experiment.label(),
            mrr: r.mean.mrr,
            auc: r.mean.auc,
            ndcg_at_1: r.mean.ndcg_at_1,
            failed_folds: failed,
        };
        match c.experiment {
            Experiment::Cv => {
                for g in &r.graphs {
                    let ranking: Vec<&str> = g.ranking.iter().map(|&j| p.model_ids()[j].as_str()).collect();
                    pw.write_record([
                        c.selector.clone(),
                        ids[g.graph].clone(),
                        g.fold.to_string(),
                        ranking.join(";"),
                        g.mrr.to_string(),
                        g.auc.map(|a| a.to_string()).unwrap_or_default(),
                        g.ndcg_at_1.to_string(),
                        g.gap.to_string(),
                    ])
                    .kind(FailureKind::Runtime)?;
                }
                let gaps = best_gap_report(r);
                cv_rows.push(CvRow {
                    selector: &c.selector,
                    mrr: r.mean.mrr,
                    auc: r.mean.auc,
                    ndcg_at_1: r.mean.ndcg_at_1,
                    gap_mean: gaps.mean,
                    gap_median: gaps.median,
                    gap_q1: gaps.q1,
                    gap_q3: gaps.q3,
                    failed_folds: failed,
                });
                cv_metrics.push((c.selector.clone(), r.mean));
            }
            Experiment::Sparsity(_) => sparsity.push(row),
            Experiment::Perturbation(_) => perturbation.push(row),
        }
    }
    let mut preds = header_line("metagl-predictions", &hash, &[]).into_bytes();
    preds.push(b'\n');
    preds.extend(pw.into_inner().map_err(|e| e.into_error()).kind(FailureKind::Runtime)?);
    formats::write_bytes(&out_dir.join("predictions.csv"), &preds).kind(FailureKind::Runtime)?;

    let mut order: Vec<(&str, f64)> = cv_rows.iter().map(|r| (r.selector, r.mrr)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let summary = Summary {
        format: "metagl-evaluation",
        schema_version: metagl_core::features::SCHEMA_VERSION,
        config_hash: hash,
        conventions: Conventions {
            ndcg_gain: "raw performance; predicted-top over best",
            auc_ties: "tied scores count one half",
            score_ties: "average rank",
            label_ties: "every maximum is positive",
            sparsity_truth: "fit on masked rows, scored against the full matrix",
        },
        graphs: p.n_graphs(),
        models: p.n_models(),
        synthetic: cfg.eval.synthetic,
        folds,
        mrr_ranking: order.into_iter().map(|r| r.0).collect(),
        cross_validation: cv_rows,
        sparsity,
        perturbation,
        errors: errors.clone(),
    };
    let json = serde_json::to_vec_pretty(&summary).context("serializing summary").kind(FailureKind::Runtime)?;
    formats::write_bytes(&summary_json, &json).kind(FailureKind::Runtime)?;
    log(
        "evaluate",
        &[("cells", &cells.len()), ("errors", &errors.len()), ("seconds", &start.elapsed().as_secs_f64()), ("output", &out_dir.display())],
    );
    Ok(EvaluateOutcome { results_csv, summary_json, cv: cv_metrics })
}

/// Writes the planted corpus as edge-list files, a performance CSV and a
/// family table under `out`.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> CmdResult<usize> {
    let s = &cfg.synthetic;
    let c = generate_synthetic_corpus(s.n_graphs, s.families, s.models, s.noise, cfg.seed).kind(FailureKind::Config)?;
    let gdir = out.join("graphs");
    for (id, g) in c.graph_ids.iter().zip(&c.graphs) {
        formats::write_bytes(&gdir.join(format!("{id}.txt")), g.to_edge_list().as_bytes()).kind(FailureKind::Runtime)?;
    }
    formats::write_perf_csv(&out.join("performance.csv"), &c.p).kind(FailureKind::Runtime)?;
    let mut fam = String::from("graph_id,family,dominant_model\n");
    for (i, id) in c.graph_ids.iter().enumerate() {
        let f = c.families[i];
        fam.push_str(&format!(
            "{id},{},{}\n",
            metagl_core::eval::synth::FAMILY_NAMES[f],
            c.p.model_ids()[c.dominant[f]]
        ));
    }
    formats::write_bytes(&out.join("families.csv"), fam.as_bytes()).kind(FailureKind::Runtime)?;
    log("synth", &[("graphs", &c.graphs.len()), ("models", &s.models), ("output", &out.display())]);
    Ok(c.graphs.len())
}
