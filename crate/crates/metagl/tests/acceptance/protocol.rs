//! Planted-corpus benchmark, sweeps and ranking metrics.

use std::sync::OnceLock;
use std::time::Instant;

use metagl::commands::{load_corpus, run_cell, Experiment};
use metagl::RunConfig;
use metagl_core::eval::{auc, label_top1, mrr, ndcg_at_1, EvalResult};
use metagl_core::perf::{perturb, PerformanceMatrix};
use metagl_core::rng::seeded;
use metagl_core::selector::{Selector, SelectorKind};
use metagl_core::Matrix;
use rand::Rng;

use crate::{ensure, Outcome};

/// Seed of the acceptance benchmark, fixed before any run.
const SEED: u64 = 42;

fn planted_config() -> RunConfig {
    let mut cfg = RunConfig { seed: SEED, ..RunConfig::default() };
    cfg.eval.synthetic = true;
    cfg.synthetic.n_graphs = 60;
    cfg.synthetic.families = 3;
    cfg.synthetic.models = 8;
    cfg.synthetic.noise = 0.05;
    cfg.eval.folds = 5;
    cfg
}

fn corpus() -> &'static (Matrix, PerformanceMatrix) {
    static CORPUS: OnceLock<(Matrix, PerformanceMatrix)> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let (_, features, p) = load_corpus(&planted_config()).expect("planted corpus");
        (features, p)
    })
}

fn selector(name: &str) -> SelectorKind {
    planted_config().selectors().into_iter().find(|k| k.name() == name).expect("configured selector")
}

fn run(name: &str, exp: Experiment) -> Result<EvalResult, String> {
    let (features, p) = corpus();
    let r = run_cell(features, p, &selector(name), exp, 5, SEED).map_err(|e| format!("{name}: {e}"))?;
    if let Some(f) = r.folds.iter().find(|f| f.error.is_some()) {
        return Err(format!("{name} fold {} failed: {:?}", f.fold, f.error));
    }
    Ok(r)
}

pub fn planted_benchmark() -> Outcome {
    let start = Instant::now();
    let metagl = run("metagl", Experiment::Cv)?.mean.mrr;
    let argo = run("argosmart", Experiment::Cv)?.mean.mrr;
    let random = run("random", Experiment::Cv)?;
    let avgperf = run("gb-avgperf", Experiment::Cv)?.mean.mrr;

    // a uniformly random rank among 8 for each graph's single best model
    let m = 8.0;
    let mean = (1..=8).map(|i| 1.0 / i as f64).sum::<f64>() / m;
    let second = (1..=8).map(|i| 1.0 / (i * i) as f64).sum::<f64>() / m;
    let sigma = ((second - mean * mean) / random.graphs.len() as f64).sqrt();
    let secs = start.elapsed().as_secs_f64();

    ensure!(metagl >= 0.8, "MetaGL MRR {metagl:.3}");
    ensure!(argo >= 0.8, "ARGOSMART MRR {argo:.3}");
    ensure!(
        (random.mean.mrr - mean).abs() <= 3.0 * sigma,
        "Random MRR {:.3} vs expected {mean:.3} (sigma {sigma:.3})",
        random.mean.mrr
    );
    ensure!(metagl >= avgperf, "MetaGL MRR {metagl:.3} below GB-AvgPerf {avgperf:.3}");
    ensure!(secs < 600.0, "took {secs:.0}s");
    Ok(format!(
        "MRR MetaGL {metagl:.3}, ARGOSMART {argo:.3}, GB-AvgPerf {avgperf:.3}, Random {:.3} (expected {mean:.3} +- {:.3})",
        random.mean.mrr,
        3.0 * sigma
    ))
}

pub fn sparsity_robustness() -> Outcome {
    let metagl = run("metagl", Experiment::Sparsity(0.9))?.mean.mrr;
    let random = run("random", Experiment::Sparsity(0.9))?.mean.mrr;
    ensure!(metagl - random >= 0.2, "MetaGL {metagl:.3} vs Random {random:.3} at sparsity 0.9");
    Ok(format!("at sparsity 0.9 MetaGL {metagl:.3} vs Random {random:.3}"))
}

pub fn perturbation_identity() -> Outcome {
    for kind in planted_config().selectors() {
        let name = kind.name();
        let plain = run(&name, Experiment::Cv)?;
        let zero = run(&name, Experiment::Perturbation(0.0))?;
        // Debug output of f64 round-trips, so equal text means equal bits
        ensure!(format!("{plain:?}") == format!("{zero:?}"), "{name}: r = 0 differs from the unperturbed run");
    }
    let one = PerformanceMatrix::full(Matrix::filled(1, 1, 0.5)).unwrap();
    for seed in 0..10_000 {
        let v = perturb(&one, 0.2, seed).unwrap().values()[(0, 0)];
        ensure!((0.45..=0.55).contains(&v), "seed {seed}: 0.5 perturbed to {v}");
    }
    Ok("r = 0 bitwise equal for all 8 selectors; 0.5 at r = 0.2 stays in [0.45, 0.55] over 10000 seeds".into())
}

/// Average rank of each item over every tie-breaking order of the scores.
fn brute_average_ranks(scores: &[f64]) -> Vec<f64> {
    let m = scores.len();
    let mut perms = vec![vec![]];
    for k in 0..m {
        perms = perms
            .into_iter()
            .flat_map(|p: Vec<usize>| (0..=p.len()).map(move |i| {
                let mut q = p.clone();
                q.insert(i, k);
                q
            }))
            .collect();
    }
    let mut total = vec![0.0; m];
    for p in &perms {
        // sort by score descending, ties in the order given by p
        let mut order = p.clone();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        for (r, &i) in order.iter().enumerate() {
            total[i] += (r + 1) as f64;
        }
    }
    total.iter().map(|t| t / perms.len() as f64).collect()
}

pub fn metric_oracles() -> Outcome {
    let mut rng = seeded(0x11);
    for t in 0..1000 {
        let m = rng.gen_range(2..=7);
        let grid = t % 2 == 0;
        let draw = |rng: &mut metagl_core::rng::Rng| if grid { rng.gen_range(0..4) as f64 / 4.0 } else { rng.gen_range(0.0..1.0) };
        let truth: Vec<f64> = (0..m).map(|_| draw(&mut rng)).collect();
        let scores: Vec<f64> = (0..m).map(|_| draw(&mut rng)).collect();
        let best = truth.iter().copied().fold(f64::MIN, f64::max);
        let labels: Vec<bool> = truth.iter().map(|&v| v == best).collect();
        ensure!(label_top1(&truth).unwrap() == labels, "labels differ on {truth:?}");

        let avg = brute_average_ranks(&scores);
        let want_mrr = 1.0 / (0..m).filter(|&i| labels[i]).map(|i| avg[i]).fold(f64::MAX, f64::min);
        let got = mrr(&scores, &labels).unwrap();
        ensure!((got - want_mrr).abs() <= 1e-12, "MRR {got} vs {want_mrr} on {scores:?} {labels:?}");

        if labels.iter().any(|&l| !l) {
            let (mut wins, mut pairs) = (0.0, 0.0);
            for i in (0..m).filter(|&i| labels[i]) {
                for j in (0..m).filter(|&j| !labels[j]) {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
            let got = auc(&scores, &labels).unwrap();
            ensure!((got - wins / pairs).abs() <= 1e-12, "AUC {got} vs {}", wins / pairs);
        }

        let mut top = 0;
        for i in 1..m {
            if scores[i] > scores[top] {
                top = i;
            }
        }
        let want_ndcg = if best <= 0.0 { 1.0 } else { truth[top] / best };
        let got = ndcg_at_1(&scores, &truth).unwrap();
        ensure!((got - want_ndcg).abs() <= 1e-12, "NDCG@1 {got} vs {want_ndcg}");

        // the oracle selector ranks by the truth itself
        if !grid {
            ensure!(mrr(&truth, &labels).unwrap() == 1.0, "oracle MRR below 1");
            ensure!(auc(&truth, &labels).unwrap() == 1.0, "oracle AUC below 1");
            ensure!(ndcg_at_1(&truth, &truth).unwrap() == 1.0, "oracle NDCG@1 below 1");
        }
    }
    Ok("MRR, AUC and NDCG@1 match brute force on 1000 instances; oracle selector scores 1.0".into())
}
