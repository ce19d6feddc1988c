//! Statistical summarizers mapping a distribution of any length to a fixed
//! vector of [`SUMMARY_LEN`] values.
//!
//! Conventions: population moments; linear-interpolation quantiles; tau-b
//! for Kendall with the asymptotic (normal) p-value; t-test p-values for
//! Pearson and Spearman; entropy over the empirical distribution of distinct
//! values; 10-bin equal-width histogram. Any statistic that is undefined for
//! the input (zero divisor, zero variance, too few points) is reported as 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 10;

/// Names of the summary entries, in output order.
pub const SUMMARY_NAMES: [&str; 56] = [
    "num_unique",
    "density",
    "q1",
    "q3",
    "iqr",
    "outlier_lb_1.5",
    "outlier_ub_1.5",
    "outlier_total_1.5",
    "outlier_lb_3",
    "outlier_ub_3",
    "outlier_total_3",
    "std_outlier_lb_2",
    "std_outlier_ub_2",
    "std_outlier_total_2",
    "std_outlier_lb_3",
    "std_outlier_ub_3",
    "std_outlier_total_3",
    "spearman_r",
    "spearman_p",
    "kendall_tau",
    "kendall_p",
    "pearson_r",
    "pearson_p",
    "min",
    "max",
    "range",
    "median",
    "geometric_mean",
    "harmonic_mean",
    "mean",
    "stdev",
    "variance",
    "skewness",
    "kurtosis",
    "quartile_dispersion",
    "median_abs_dev",
    "avg_abs_dev",
    "coeff_variation",
    "efficiency_ratio",
    "variance_to_mean",
    "snr",
    "entropy",
    "norm_entropy",
    "gini",
    "quartile_max_gap",
    "centroid_max_gap",
    "hist_0",
    "hist_1",
    "hist_2",
    "hist_3",
    "hist_4",
    "hist_5",
    "hist_6",
    "hist_7",
    "hist_8",
    "hist_9",
];

pub const SUMMARY_LEN: usize = SUMMARY_NAMES.len();

/// Position of a named statistic in the summary vector.
pub fn summary_index(name: &str) -> Option<usize> {
    SUMMARY_NAMES.iter().position(|&n| n == name)
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Quantile of ascending-sorted data with linear interpolation between order
/// statistics (position `(n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

fn sort_copy(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

/// Average (fractional) ranks, 1-based, ties sharing the mean of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation coefficient, 0 when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0)
}

/// Two-sided p-value of a correlation coefficient under the t-test with
/// `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 0.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t2 = r * r * df / (1.0 - r * r);
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2))
}

/// Kendall tau-b and its asymptotic two-sided p-value, in `O(n log n)`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    // tie groups in x, and joint ties in (x, y)
    let tie_stats = |groups: &mut dyn Iterator<Item = u64>| {
        let (mut pairs, mut v0, mut v1, mut v2) = (0u64, 0.0f64, 0.0f64, 0.0f64);
        for t in groups {
            let tf = t as f64;
            pairs += t * (t - 1) / 2;
            v0 += tf * (tf - 1.0) * (2.0 * tf + 5.0);
            v1 += tf * (tf - 1.0);
            v2 += tf * (tf - 1.0) * (tf - 2.0);
        }
        (pairs, v0, v1, v2)
    };
    let run_lengths = |eq: &dyn Fn(usize, usize) -> bool| {
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && eq(idx[j - 1], idx[j]) {
                j += 1;
            }
            out.push((j - i) as u64);
            i = j;
        }
        out
    };
    let x_runs = run_lengths(&|a, b| x[a] == x[b]);
    let xy_runs = run_lengths(&|a, b| x[a] == x[b] && y[a] == y[b]);
    let (n1, xv0, xv1, xv2) = tie_stats(&mut x_runs.into_iter());
    let (n3, _, _, _) = tie_stats(&mut xy_runs.into_iter());

    // merge sort on y counting inversions (discordant pairs)
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let mut y_runs = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        y_runs.push((j - i) as u64);
        i = j;
    }
    let (n2, yv0, yv1, yv2) = tie_stats(&mut y_runs.into_iter());

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
    let s = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let denom = libm::sqrt((n0 - n1) as f64 * (n0 - n2) as f64);
    if denom == 0.0 {
        return (0.0, 0.0);
    }
    let tau = (s / denom).clamp(-1.0, 1.0);
    let nf = n as f64;
    let mut var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - xv0 - yv0) / 18.0
        + xv1 * yv1 / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += xv2 * yv2 / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    if !(var > 0.0) {
        return (tau, 0.0);
    }
    let z = s / libm::sqrt(var);
    (tau, libm::erfc(z.abs() / core::f64::consts::SQRT_2))
}

fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[j] < a[i] {
            buf[k] = a[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = a[i];
            i += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = a[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = a[j];
        j += 1;
        k += 1;
    }
    a.copy_from_slice(&buf[..n]);
    swaps
}

/// Regularized incomplete beta function `I_x(a, b)` via Lentz's continued
/// fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Summarizes `values` into [`SUMMARY_LEN`] statistics in [`SUMMARY_NAMES`]
/// order. Sequence-dependent statistics (the correlations against the sorted
/// vector) read `values` in the order given.
pub fn summarize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("distribution contains non-finite values".into()));
    }
    let n = values.len();
    let nf = n as f64;
    let sorted = sort_copy(values);
    let (min, max) = (sorted[0], sorted[n - 1]);
    let constant = min == max;

    let mut out = Vec::with_capacity(SUMMARY_LEN);

    let mut unique = 1usize;
    for w in sorted.windows(2) {
        if w[0] != w[1] {
            unique += 1;
        }
    }
    out.push(unique as f64);
    out.push(values.iter().filter(|&&v| v != 0.0).count() as f64 / nf);

    let q1 = quantile_sorted(&sorted, 0.25);
    let med = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    out.extend_from_slice(&[q1, q3, iqr]);
    for alpha in [1.5, 3.0] {
        let lb = values.iter().filter(|&&v| v < q1 - alpha * iqr).count() as f64;
        let ub = values.iter().filter(|&&v| v > q3 + alpha * iqr).count() as f64;
        out.extend_from_slice(&[lb, ub, lb + ub]);
    }

    let (mean, var) = if constant {
        (min, 0.0)
    } else {
        let m = values.iter().sum::<f64>() / nf;
        (m, values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf)
    };
    let sd = libm::sqrt(var);
    for alpha in [2.0, 3.0] {
        let (lb, ub) = if sd == 0.0 {
            (0.0, 0.0)
        } else {
            (
                values.iter().filter(|&&v| v < mean - alpha * sd).count() as f64,
                values.iter().filter(|&&v| v > mean + alpha * sd).count() as f64,
            )
        };
        out.extend_from_slice(&[lb, ub, lb + ub]);
    }

    let rx = average_ranks(values);
    let ry = average_ranks(&sorted);
    let rho = pearson(&rx, &ry);
    out.push(rho);
    out.push(if constant { 0.0 } else { correlation_p_value(rho, n) });
    let (tau, tau_p) = kendall_tau_b(values, &sorted);
    out.push(tau);
    out.push(tau_p);
    let r = pearson(values, &sorted);
    out.push(r);
    out.push(if constant { 0.0 } else { correlation_p_value(r, n) });

    out.extend_from_slice(&[min, max, max - min, med]);

    let geo = if min <= 0.0 {
        0.0
    } else {
        libm::exp(values.iter().map(|&v| libm::log(v)).sum::<f64>() / nf)
    };
    let harm = if min <= 0.0 { 0.0 } else { nf / values.iter().map(|v| 1.0 / v).sum::<f64>() };
    out.extend_from_slice(&[geo, harm, mean, sd, var]);
    let (m3, m4) = if constant {
        (0.0, 0.0)
    } else {
        values.iter().fold((0.0, 0.0), |(a, b), v| {
            let d = v - mean;
            (a + d * d * d / nf, b + d * d * d * d / nf)
        })
    };
    out.push(ratio(m3, var * sd));
    out.push(if var == 0.0 { 0.0 } else { m4 / (var * var) - 3.0 });

    out.push(ratio(q3 - q1, q3 + q1));
    let abs_dev = sort_copy(&values.iter().map(|v| (v - med).abs()).collect::<Vec<_>>());
    out.push(quantile_sorted(&abs_dev, 0.5));
    out.push(values.iter().map(|v| (v - mean).abs()).sum::<f64>() / nf);
    out.push(ratio(sd, mean));
    out.push(ratio(var, mean * mean));
    out.push(ratio(var, mean));
    out.push(ratio(mean * mean, var));

    // entropy of the empirical distribution of distinct values
    let mut entropy = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let p = (j - i) as f64 / nf;
        entropy -= p * libm::log(p);
        i = j;
    }
    out.push(entropy);
    out.push(if n > 1 { entropy / libm::log(nf) } else { 0.0 });

    let gini_num: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &v)| (2.0 * k as f64 - nf + 1.0) * v)
        .sum();
    out.push(if constant { 0.0 } else { ratio(gini_num, nf * nf * mean) });

    let qs = [min, q1, med, q3, max];
    out.push(qs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max));
    let centroids: Vec<f64> = (0..4)
        .filter_map(|c| {
            let (s, e) = (c * n / 4, (c + 1) * n / 4);
            (e > s).then(|| sorted[s..e].iter().sum::<f64>() / (e - s) as f64)
        })
        .collect();
    let cmax = centroids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cmin = centroids.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(cmax - cmin);

    let mut hist = [0usize; HISTOGRAM_BINS];
    if constant {
        hist[0] = n;
    } else {
        let width = (max - min) / HISTOGRAM_BINS as f64;
        for &v in values {
            let b = libm::floor((v - min) / width) as usize;
            hist[b.min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    out.extend(hist.iter().map(|&c| c as f64 / nf));

    debug_assert_eq!(out.len(), SUMMARY_LEN);
    for v in &mut out {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    Ok(out)
}
