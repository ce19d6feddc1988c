//! Gradient check, listwise loss and masked factorization.

use std::time::Instant;

use metagl_core::learner::{self, top1_loss, top1_probability, TinyInstance};
use metagl_core::perf::{factorize, mask_random, PerformanceMatrix};
use metagl_core::rng::seeded;
use metagl_core::Matrix;
use rand::Rng;

use crate::{ensure, Outcome};

pub fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let inst = TinyInstance::random(4, 3, 4, 1, 1, seed).map_err(|e| e.to_string())?;
        let err = learner::gradient_check(&inst).map_err(|e| e.to_string())?;
        ensure!(err < 1e-4, "seed {seed}: max relative error {err:e}");
        worst = worst.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!("n=4 m=3 k=4 L=1 h=1 over 5 seeds, max relative error {worst:e}"))
}

/// Cross entropy written as the plain double loop over observed entries.
fn scalar_loss(p: &[Vec<Option<f64>>], s: &[Vec<f64>]) -> f64 {
    let mut loss = 0.0;
    for (prow, srow) in p.iter().zip(s) {
        let zp: f64 = prow.iter().flatten().map(|v| v.exp()).sum();
        let zs: f64 = prow.iter().zip(srow).filter(|(v, _)| v.is_some()).map(|(_, x)| x.exp()).sum();
        for (v, x) in prow.iter().zip(srow) {
            if let Some(v) = v {
                loss -= (v.exp() / zp) * (x.exp() / zs).ln();
            }
        }
    }
    loss
}

fn build(p: &[Vec<Option<f64>>]) -> PerformanceMatrix {
    let (n, m) = (p.len(), p[0].len());
    let values = Matrix::from_fn(n, m, |i, j| p[i][j].unwrap_or(0.0));
    let mask = p.iter().flatten().map(Option::is_some).collect();
    PerformanceMatrix::new(
        values,
        mask,
        (0..n).map(|i| format!("g{i}")).collect(),
        (0..m).map(|j| format!("m{j}")).collect(),
    )
    .unwrap()
}

pub fn loss_properties() -> Outcome {
    let mut rng = seeded(0x70);
    let mut worst_sum = 0.0f64;
    for _ in 0..1000 {
        let m = rng.gen_range(1..=12);
        let s: Vec<f64> = (0..m).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let q = top1_probability(&s);
        let total: f64 = q.iter().sum();
        ensure!((total - 1.0).abs() <= 1e-9, "probabilities sum to {total}");
        worst_sum = worst_sum.max((total - 1.0).abs());
        let c = rng.gen_range(-100.0..100.0);
        let shifted = top1_probability(&s.iter().map(|x| x + c).collect::<Vec<_>>());
        for (a, b) in q.iter().zip(&shifted) {
            ensure!((a - b).abs() <= 1e-12, "shift by {c} moved a probability by {:e}", (a - b).abs());
        }
    }

    let mut worst_loss = 0.0f64;
    for t in 0..100 {
        let (n, m) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let density = rng.gen_range(0.2..1.0);
        let mut p: Vec<Vec<Option<f64>>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_bool(density).then(|| rng.gen_range(0.0..1.0))).collect())
            .collect();
        if t % 3 == 0 {
            p[rng.gen_range(0..n)] = vec![None; m];
        }
        let s: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let hat = Matrix::from_rows(&s).unwrap();
        let got = top1_loss(&build(&p), &hat).map_err(|e| e.to_string())?;
        let want = scalar_loss(&p, &s);
        ensure!((got - want).abs() <= 1e-10, "instance {t}: loss {got} vs scalar loop {want}");
        worst_loss = worst_loss.max((got - want).abs());

        // appending an unobserved row with arbitrary estimates changes nothing
        let mut p2 = p.clone();
        p2.push(vec![None; m]);
        let mut s2 = s.clone();
        s2.push((0..m).map(|_| rng.gen_range(-50.0..50.0)).collect());
        let with_empty = top1_loss(&build(&p2), &Matrix::from_rows(&s2).unwrap()).unwrap();
        ensure!(with_empty.to_bits() == got.to_bits(), "empty row contributed {}", with_empty - got);
    }
    Ok(format!(
        "probability sums within {worst_sum:e}, loss within {worst_loss:e} of the scalar loop, empty rows exactly 0"
    ))
}

pub fn masked_factorization() -> Outcome {
    let mut rng = seeded(0x6F);
    let u = Matrix::from_fn(20, 2, |_, _| rng.gen_range(0.0..0.7));
    let v = Matrix::from_fn(10, 2, |_, _| rng.gen_range(0.0..0.7));
    let full = PerformanceMatrix::full(u.matmul_bt(&v).unwrap()).unwrap();
    let masked = mask_random(&full, 0.3, 7).unwrap();
    ensure!(masked.observed_count() == 140, "{} cells observed", masked.observed_count());
    let f = factorize(&masked, 2, 3).map_err(|e| e.to_string())?;
    let rmse = f.observed_rmse(&masked);
    ensure!(rmse < 0.05, "observed RMSE {rmse}");
    for (i, w) in f.objective.windows(2).enumerate() {
        ensure!(w[1] <= w[0], "objective rose at iteration {}: {} -> {}", i + 1, w[0], w[1]);
    }
    Ok(format!("observed RMSE {rmse:.2e} after {} non-increasing iterations", f.objective.len()))
}
