//! Offline training loop and the finite-difference gradient checker.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::model::{forward, relation_edges, Layout};
use super::tape::Tape;
use super::{top1_loss_masked, LearnerConfig, MetaLearnerState};
use crate::error::{arg_err, dim_err, Error, Result};
use crate::eval::{label_top1, mrr};
use crate::features::SCHEMA_VERSION;
use crate::gmnet::{build_train_network, extend_with_test, GmNetwork};
use crate::linalg::Matrix;
use crate::perf::{factorize, fit_factor_estimator, PerformanceMatrix, Standardizer};
use crate::rng::{derive, seeded};

/// Per-epoch record. Index 0 is the untrained (warm-start) state.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub val_mrr: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub val_graphs: Vec<usize>,
}

/// Loss over the observed entries of `target` and its gradient with respect
/// to every parameter tensor.
pub fn loss_and_gradients(
    layout: &Layout,
    params: &[Matrix],
    graph_inputs: &Matrix,
    net: &GmNetwork,
    target: &PerformanceMatrix,
) -> Result<(f64, Vec<Matrix>)> {
    let edges = relation_edges(net);
    let mut tape = Tape::new();
    let (leaves, zg, zm) = forward(&mut tape, layout, params, graph_inputs, &edges)?;
    if tape.value(zg).rows() != target.n_graphs() || layout.n_models != target.n_models() {
        return Err(dim_err("performance matrix does not match the network"));
    }
    let scores = tape.matmul_bt(zg, zm);
    let loss = tape.top1_loss(scores, target.values(), target.mask());
    let value = tape.value(loss)[(0, 0)];
    let mut grads = tape.backward(loss);
    let out = leaves
        .iter()
        .zip(params)
        .map(|(&id, p)| grads[id].take().unwrap_or_else(|| Matrix::zeros(p.rows(), p.cols())))
        .collect();
    Ok((value, out))
}

fn loss_only(layout: &Layout, params: &[Matrix], inputs: &Matrix, net: &GmNetwork, target: &PerformanceMatrix) -> Result<f64> {
    let mut tape = Tape::new();
    let (_, zg, zm) = forward(&mut tape, layout, params, inputs, &relation_edges(net))?;
    let scores = tape.value(zg).matmul_bt(tape.value(zm))?;
    Ok(top1_loss_masked(target.values(), &scores, target.mask()))
}

struct Adam {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
    lr: f64,
    weight_decay: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &[Matrix], lr: f64, weight_decay: f64) -> Adam {
        let zeros = || params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        Adam { m: zeros(), v: zeros(), t: 0, lr, weight_decay }
    }

    fn step(&mut self, params: &mut [Matrix], grads: &[Matrix]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(Self::B1, self.t as f64);
        let c2 = 1.0 - libm::pow(Self::B2, self.t as f64);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for (((x, &gx), mx), vx) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                let gx = gx + self.weight_decay * *x;
                *mx = Self::B1 * *mx + (1.0 - Self::B1) * gx;
                *vx = Self::B2 * *vx + (1.0 - Self::B2) * gx * gx;
                *x -= self.lr * (*mx / c1) / (libm::sqrt(*vx / c2) + Self::EPS);
            }
        }
    }
}

struct Holdout {
    net: GmNetwork,
    inputs: Matrix,
    truth: Vec<f64>,
    mask: Vec<bool>,
}

fn holdout_metrics(layout: &Layout, params: &[Matrix], holdout: &[Holdout]) -> Result<Option<(f64, f64)>> {
    if holdout.is_empty() {
        return Ok(None);
    }
    let (mut mrr_sum, mut loss_sum) = (0.0, 0.0);
    for h in holdout {
        let mut tape = Tape::new();
        let (_, zg, zm) = forward(&mut tape, layout, params, &h.inputs, &relation_edges(&h.net))?;
        let t = tape.value(zg).rows() - 1;
        let scores: Vec<f64> = (0..layout.n_models)
            .map(|j| crate::linalg::dot(tape.value(zg).row(t), tape.value(zm).row(j)))
            .collect();
        let obs: Vec<usize> = (0..scores.len()).filter(|&j| h.mask[j]).collect();
        let s: Vec<f64> = obs.iter().map(|&j| scores[j]).collect();
        let y: Vec<f64> = obs.iter().map(|&j| h.truth[j]).collect();
        mrr_sum += mrr(&s, &label_top1(&y)?)?;
        let tm = Matrix::from_vec(1, scores.len(), h.truth.clone())?;
        let sm = Matrix::from_vec(1, scores.len(), scores)?;
        loss_sum += top1_loss_masked(&tm, &sm, &h.mask);
    }
    let n = holdout.len() as f64;
    Ok(Some((mrr_sum / n, loss_sum / n)))
}

/// Largest head count not above `heads` that divides `k`.
fn fit_heads(k: usize, heads: usize) -> usize {
    (1..=heads.max(1)).rev().find(|h| k.is_multiple_of(*h)).unwrap_or(1)
}

/// Trains the meta-learner on raw meta-features (`n x d`) and the
/// performance matrix. A share of the graphs is held out; the returned state
/// carries the parameters of the epoch with the best held-out MRR (lower
/// held-out loss breaks ties), or of the last epoch when no held-out graph has
/// observations.
pub fn train(features: &Matrix, p: &PerformanceMatrix, config: &LearnerConfig) -> Result<MetaLearnerState> {
    let (n, d) = features.shape();
    let m = p.n_models();
    if n != p.n_graphs() {
        return Err(dim_err(format!("{n} feature rows for {} performance rows", p.n_graphs())));
    }
    if n < 5 {
        return Err(Error::InsufficientData(format!("{n} graphs; training needs at least 5")));
    }
    if m < 2 {
        return Err(Error::InsufficientData("training needs at least 2 models".into()));
    }
    if !features.all_finite() {
        return Err(Error::NonFinite("meta-features".into()));
    }
    if p.observed_count() == 0 {
        return Err(Error::InsufficientData("performance matrix has no observed entries".into()));
    }
    if config.k == 0 || config.heads == 0 || config.top_k == 0 {
        return Err(arg_err("k, heads and top_k must be positive"));
    }
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(arg_err("val_fraction must lie in [0, 1)"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(derive(config.seed, 1)));
    let n_val = if config.val_fraction > 0.0 {
        (libm::round(config.val_fraction * n as f64) as usize).max(1)
    } else {
        0
    };
    let mut val_idx = order[..n_val].to_vec();
    let mut train_idx = order[n_val..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();

    let raw_train = features.select_rows(&train_idx);
    let standardizer = Standardizer::fit(&raw_train);
    let x_train = standardizer.transform(&raw_train);
    let p_train = p.select_rows(&train_idx);

    let k = config.k.min(m).min(train_idx.len());
    let heads = fit_heads(k, config.heads);
    let factors = factorize(&p_train, k, derive(config.seed, 2))?;
    let phi = fit_factor_estimator(&x_train, &factors.u, config.ridge_lambda)?;
    let u_hat = phi.predict_matrix(&x_train)?;
    let network = build_train_network(&u_hat, &factors.v, &x_train, config.top_k)?;
    let inputs = MetaLearnerState::network_inputs(&network);

    let layout = Layout { input_dim: d + k, n_models: m, k, heads, layers: config.layers };
    let mut params = layout.init(&factors.v, &mut seeded(derive(config.seed, 3)))?;

    let mut holdout = Vec::new();
    for &i in &val_idx {
        // a row needs two observed models with different performance to say
        // anything about ranking quality
        let obs: Vec<f64> = p.row_entries(i).map(|e| e.1).collect();
        if !obs.iter().any(|&v| v != obs[0]) {
            continue;
        }
        let z = standardizer.transform_row(features.row(i));
        let u = phi.predict(&z)?;
        let net = extend_with_test(&network, &z, &u)?;
        let inputs = MetaLearnerState::network_inputs(&net);
        holdout.push(Holdout {
            net,
            inputs,
            truth: p.values().row(i).to_vec(),
            mask: p.row_mask(i).to_vec(),
        });
    }

    let mut history = TrainingHistory { val_graphs: val_idx.clone(), ..Default::default() };
    let mut adam = Adam::new(&params, config.lr, config.weight_decay);
    let mut best = params.clone();
    let mut best_key: Option<(f64, f64)> = None;
    let mut wait = 0;
    for epoch in 0..=config.max_epochs {
        let (loss, grads) = loss_and_gradients(&layout, &params, &inputs, &network, &p_train)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        history.train_loss.push(loss);
        match holdout_metrics(&layout, &params, &holdout)? {
            Some((vm, vl)) => {
                history.val_mrr.push(vm);
                history.val_loss.push(vl);
                let better = match best_key {
                    None => true,
                    Some((bm, bl)) => vm > bm || (vm == bm && vl < bl),
                };
                if better {
                    best_key = Some((vm, vl));
                    best.clone_from(&params);
                    history.best_epoch = epoch;
                    wait = 0;
                } else {
                    wait += 1;
                    if wait >= config.patience {
                        break;
                    }
                }
            }
            None => {
                best.clone_from(&params);
                history.best_epoch = epoch;
            }
        }
        if epoch == config.max_epochs {
            break;
        }
        adam.step(&mut params, &grads);
        if let Some(bad) = params.iter().position(|t| !t.all_finite()) {
            return Err(Error::NonFinite(format!("{} after epoch {}", layout.name(bad), epoch + 1)));
        }
    }

    Ok(MetaLearnerState {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        layout,
        standardizer,
        phi,
        network,
        params: best,
        model_ids: p.model_ids().to_vec(),
        history,
    })
}

/// A small fixed problem for checking gradients.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub layout: Layout,
    pub params: Vec<Matrix>,
    pub graph_inputs: Matrix,
    pub network: GmNetwork,
    pub target: PerformanceMatrix,
}

impl TinyInstance {
    /// Random instance with `n` graphs, `m` models, embedding size `k`,
    /// 3 raw meta-features, `top_k = 2`, and about a quarter of `P` masked.
    /// Gates and priors are drawn away from their initial values.
    pub fn random(n: usize, m: usize, k: usize, layers: usize, heads: usize, seed: u64) -> Result<TinyInstance> {
        use rand::Rng as _;
        let mut rng = seeded(seed);
        let mut rand_matrix = |r: usize, c: usize, lo: f64, hi: f64| Matrix::from_fn(r, c, |_, _| rng.gen_range(lo..hi));
        let meta = rand_matrix(n, 3, -1.0, 1.0);
        let u_hat = rand_matrix(n, k, 0.0, 1.0);
        let v = rand_matrix(m, k, 0.0, 1.0);
        let values = rand_matrix(n, m, 0.0, 1.0);
        let network = build_train_network(&u_hat, &v, &meta, 2)?;
        let graph_inputs = MetaLearnerState::network_inputs(&network);
        let layout = Layout { input_dim: 3 + k, n_models: m, k, heads, layers };
        let mut rng = seeded(derive(seed, 1));
        let mut params = layout.init(&v, &mut rng)?;
        for p in params.iter_mut().filter(|p| p.rows() == 1) {
            p.data_mut().iter_mut().for_each(|x| *x = rng.gen_range(0.5..1.5));
        }
        let mut mask: Vec<bool> = (0..n * m).map(|_| rng.gen_bool(0.75)).collect();
        mask[0] = true;
        let target = PerformanceMatrix::full(values)?.with_mask(mask)?;
        Ok(TinyInstance { layout, params, graph_inputs, network, target })
    }
}

/// Largest relative error between `analytic` gradients and central
/// differences of `loss` with step `step`, over every entry of every tensor.
/// The relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn compare_gradients(
    params: &[Matrix],
    analytic: &[Matrix],
    step: f64,
    mut loss: impl FnMut(&[Matrix]) -> Result<f64>,
) -> Result<f64> {
    let mut work = params.to_vec();
    let mut worst: f64 = 0.0;
    for t in 0..params.len() {
        for e in 0..params[t].data().len() {
            let orig = params[t].data()[e];
            work[t].data_mut()[e] = orig + step;
            let up = loss(&work)?;
            work[t].data_mut()[e] = orig - step;
            let down = loss(&work)?;
            work[t].data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[t].data()[e];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Analytic versus finite-difference gradients (step 1e-5) of the loss on a
/// tiny instance.
pub fn gradient_check(inst: &TinyInstance) -> Result<f64> {
    let (_, grads) = loss_and_gradients(&inst.layout, &inst.params, &inst.graph_inputs, &inst.network, &inst.target)?;
    compare_gradients(&inst.params, &grads, 1e-5, |p| {
        loss_only(&inst.layout, p, &inst.graph_inputs, &inst.network, &inst.target)
    })
}
