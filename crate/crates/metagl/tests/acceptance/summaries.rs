//! Direct-formula oracles for every summary statistic.

use std::collections::BTreeMap;

use metagl_core::features::{summarize, SUMMARY_NAMES};
use metagl_core::rng::seeded;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::{ensure, rel_close, Outcome};

fn div0(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Linear interpolation between order statistics at position `(n - 1) p`.
fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// 1-based rank with ties sharing their mean rank, by counting.
fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    div0(cov, (vx * vy).sqrt())
}

fn t_test_p(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Tau-b by explicit pair counting, with the tie-corrected normal p-value.
fn kendall(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1.0;
            } else if dy == 0.0 {
                ty += 1.0;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1.0;
            } else {
                disc += 1.0;
            }
        }
    }
    let denom = ((conc + disc + tx) * (conc + disc + ty)).sqrt();
    if denom == 0.0 {
        return (0.0, 0.0);
    }
    let tau = (conc - disc) / denom;
    let groups = |v: &[f64]| {
        let mut c: BTreeMap<u64, f64> = BTreeMap::new();
        for &a in v {
            *c.entry(a.to_bits()).or_default() += 1.0;
        }
        c.into_values().collect::<Vec<f64>>()
    };
    let (gx, gy) = (groups(x), groups(y));
    let nf = n as f64;
    let s0 = |g: &[f64]| g.iter().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum::<f64>();
    let s1 = |g: &[f64]| g.iter().map(|t| t * (t - 1.0)).sum::<f64>();
    let s2 = |g: &[f64]| g.iter().map(|t| t * (t - 1.0) * (t - 2.0)).sum::<f64>();
    let mut var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - s0(&gx) - s0(&gy)) / 18.0
        + s1(&gx) * s1(&gy) / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += s2(&gx) * s2(&gy) / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    if var <= 0.0 {
        return (tau, 0.0);
    }
    let z = (conc - disc) / var.sqrt();
    (tau, erfc(z.abs() / std::f64::consts::SQRT_2))
}

pub fn oracle(x: &[f64]) -> BTreeMap<&'static str, f64> {
    let n = x.len();
    let nf = n as f64;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let constant = sorted[0] == sorted[n - 1];
    let mut o = BTreeMap::new();
    let mut distinct: BTreeMap<u64, f64> = BTreeMap::new();
    for &v in x {
        *distinct.entry((v + 0.0).to_bits()).or_default() += 1.0;
    }
    o.insert("num_unique", distinct.len() as f64);
    o.insert("density", x.iter().filter(|&&v| v != 0.0).count() as f64 / nf);
    let (q1, med, q3) = (quantile(x, 0.25), quantile(x, 0.5), quantile(x, 0.75));
    let iqr = q3 - q1;
    o.insert("q1", q1);
    o.insert("q3", q3);
    o.insert("iqr", iqr);
    let count = |f: &dyn Fn(f64) -> bool| x.iter().filter(|&&v| f(v)).count() as f64;
    for (a, tag) in [(1.5, "1.5"), (3.0, "3")] {
        let lb = count(&|v| v < q1 - a * iqr);
        let ub = count(&|v| v > q3 + a * iqr);
        o.insert(leak(format!("outlier_lb_{tag}")), lb);
        o.insert(leak(format!("outlier_ub_{tag}")), ub);
        o.insert(leak(format!("outlier_total_{tag}")), lb + ub);
    }
    let mean = if constant { sorted[0] } else { x.iter().sum::<f64>() / nf };
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let sd = var.sqrt();
    for (a, tag) in [(2.0, "2"), (3.0, "3")] {
        let (lb, ub) = if constant {
            (0.0, 0.0)
        } else {
            (count(&|v| v < mean - a * sd), count(&|v| v > mean + a * sd))
        };
        o.insert(leak(format!("std_outlier_lb_{tag}")), lb);
        o.insert(leak(format!("std_outlier_ub_{tag}")), ub);
        o.insert(leak(format!("std_outlier_total_{tag}")), lb + ub);
    }
    let (rho, r) = if constant { (0.0, 0.0) } else { (pearson(&ranks(x), &ranks(&sorted)), pearson(x, &sorted)) };
    o.insert("spearman_r", rho);
    o.insert("spearman_p", if constant { 0.0 } else { t_test_p(rho, n) });
    let (tau, tau_p) = if n < 2 { (0.0, 0.0) } else { kendall(x, &sorted) };
    o.insert("kendall_tau", tau);
    o.insert("kendall_p", tau_p);
    o.insert("pearson_r", r);
    o.insert("pearson_p", if constant { 0.0 } else { t_test_p(r, n) });
    let (min, max) = (sorted[0], sorted[n - 1]);
    o.insert("min", min);
    o.insert("max", max);
    o.insert("range", max - min);
    o.insert("median", med);
    let positive = min > 0.0;
    o.insert("geometric_mean", if positive { (x.iter().map(|v| v.ln()).sum::<f64>() / nf).exp() } else { 0.0 });
    o.insert("harmonic_mean", if positive { nf / x.iter().map(|v| 1.0 / v).sum::<f64>() } else { 0.0 });
    o.insert("mean", mean);
    o.insert("stdev", sd);
    o.insert("variance", var);
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    o.insert("skewness", if constant { 0.0 } else { m3 / var.powf(1.5) });
    o.insert("kurtosis", if constant { 0.0 } else { m4 / (var * var) - 3.0 });
    o.insert("quartile_dispersion", div0(q3 - q1, q3 + q1));
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    o.insert("median_abs_dev", quantile(&dev, 0.5));
    o.insert("avg_abs_dev", x.iter().map(|v| (v - mean).abs()).sum::<f64>() / nf);
    o.insert("coeff_variation", div0(sd, mean));
    o.insert("efficiency_ratio", div0(var, mean * mean));
    o.insert("variance_to_mean", div0(var, mean));
    o.insert("snr", div0(mean * mean, var));
    let entropy: f64 = distinct.values().map(|c| -(c / nf) * (c / nf).ln()).sum();
    o.insert("entropy", entropy);
    o.insert("norm_entropy", if n > 1 { entropy / nf.ln() } else { 0.0 });
    // mean absolute difference over all ordered pairs
    let mad_pairs: f64 = x.iter().map(|a| x.iter().map(|b| (a - b).abs()).sum::<f64>()).sum();
    o.insert("gini", if constant { 0.0 } else { div0(mad_pairs, 2.0 * nf * nf * mean) });
    let qs = [min, q1, med, q3, max];
    o.insert("quartile_max_gap", (0..4).map(|i| qs[i + 1] - qs[i]).fold(0.0, f64::max));
    // four consecutive chunks of the sorted values, split at floor(c n / 4)
    let cents: Vec<f64> = (0..4)
        .filter_map(|c| {
            let (s, e) = (c * n / 4, (c + 1) * n / 4);
            (e > s).then(|| sorted[s..e].iter().sum::<f64>() / (e - s) as f64)
        })
        .collect();
    o.insert(
        "centroid_max_gap",
        cents.iter().copied().fold(f64::MIN, f64::max) - cents.iter().copied().fold(f64::MAX, f64::min),
    );
    let mut hist = [0.0; 10];
    for &v in x {
        let b = if constant { 0 } else { (((v - min) / ((max - min) / 10.0)).floor() as usize).min(9) };
        hist[b] += 1.0 / nf;
    }
    for (b, h) in hist.iter().enumerate() {
        o.insert(leak(format!("hist_{b}")), *h);
    }
    for v in o.values_mut() {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    o
}

fn leak(s: String) -> &'static str {
    Box::leak(s.into_boxed_str())
}

fn random_vector(rng: &mut impl Rng) -> Vec<f64> {
    let n = if rng.gen_bool(0.8) { rng.gen_range(1..=40) } else { rng.gen_range(41..=300) };
    match rng.gen_range(0..4) {
        0 => (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        1 => (0..n).map(|_| rng.gen_range(0.0f64..3.0).exp()).collect(),
        // small integer grid: many ties and zeros
        2 => (0..n).map(|_| rng.gen_range(0..6) as f64).collect(),
        _ => (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect(),
    }
}

fn compare(x: &[f64], tol: f64) -> Result<f64, String> {
    let got = summarize(x).map_err(|e| e.to_string())?;
    let want = oracle(x);
    ensure!(want.len() == SUMMARY_NAMES.len(), "oracle covers {} statistics", want.len());
    let mut worst = 0.0f64;
    for (name, g) in SUMMARY_NAMES.iter().zip(&got) {
        let w = want[name];
        ensure!(rel_close(*g, w, tol), "{name} = {g}, oracle {w} on n = {}", x.len());
        worst = worst.max((g - w).abs() / w.abs().max(1.0));
    }
    Ok(worst)
}

pub fn summary_oracles() -> Outcome {
    let mut rng = seeded(0x53);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        worst = worst.max(compare(&random_vector(&mut rng), 1e-9)?);
    }
    // degenerate inputs: documented finite values
    for x in [vec![2.5], vec![3.0; 7], vec![0.0; 4], vec![-1.0; 2]] {
        let s = summarize(&x).map_err(|e| e.to_string())?;
        ensure!(s.iter().all(|v| v.is_finite()), "non-finite summary of {x:?}");
        compare(&x, 1e-14)?;
        let stat = |name: &str| s[SUMMARY_NAMES.iter().position(|&n| n == name).unwrap()];
        ensure!(stat("stdev") == 0.0 && stat("skewness") == 0.0 && stat("pearson_p") == 0.0, "degenerate {x:?}");
        ensure!(stat("hist_0") == 1.0 && stat("num_unique") == 1.0, "degenerate histogram {x:?}");
    }
    Ok(format!("1000 vectors, worst relative error {worst:e}; constant and single-element inputs within 1e-14"))
}
