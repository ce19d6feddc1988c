//! Comparison meta-learners. All rank by descending score with ties to the
//! lower model index, and all accept partially observed performance matrices.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{arg_err, dim_err, Error, Result};
use crate::learner::ScoreSheet;
use crate::linalg::{cosine, Matrix};
use crate::perf::{factorize, fit_factor_estimator, FactorEstimator, PerformanceMatrix, Standardizer};
use crate::rng::{derive, seeded};
use crate::selector::Fitted;

fn require_observed(p: &PerformanceMatrix) -> Result<()> {
    if p.observed_count() == 0 {
        return Err(Error::InsufficientData("performance matrix has no observed entries".into()));
    }
    Ok(())
}

fn check_features(features: &Matrix, p: &PerformanceMatrix) -> Result<()> {
    if features.rows() != p.n_graphs() {
        return Err(dim_err(format!("{} feature rows for {} performance rows", features.rows(), p.n_graphs())));
    }
    if !features.all_finite() {
        return Err(Error::NonFinite("meta-features".into()));
    }
    Ok(())
}

fn check_query(m_test: &[f64], d: usize) -> Result<()> {
    if m_test.len() != d {
        return Err(dim_err(format!("meta-feature vector has length {}, selector expects {d}", m_test.len())));
    }
    Ok(())
}

/// Replaces NaN placeholders (columns with nothing to average) by the mean
/// of the other entries.
fn fill_missing(mut scores: Vec<f64>) -> Vec<f64> {
    let known: Vec<f64> = scores.iter().copied().filter(|v| !v.is_nan()).collect();
    let fill = if known.is_empty() { 0.0 } else { known.iter().sum::<f64>() / known.len() as f64 };
    scores.iter_mut().filter(|v| v.is_nan()).for_each(|v| *v = fill);
    scores
}

fn masked_col_means(p: &PerformanceMatrix, rows: &[usize]) -> Vec<f64> {
    let m = p.n_models();
    let mut sum = vec![0.0; m];
    let mut cnt = vec![0usize; m];
    for &i in rows {
        for (j, v) in p.row_entries(i) {
            sum[j] += v;
            cnt[j] += 1;
        }
    }
    fill_missing((0..m).map(|j| if cnt[j] == 0 { f64::NAN } else { sum[j] / cnt[j] as f64 }).collect())
}

/// Column means over observed cells. A column with no observations gets the
/// mean of the other columns' means.
pub fn gb_avgperf(p: &PerformanceMatrix) -> Result<Vec<f64>> {
    require_observed(p)?;
    let rows: Vec<usize> = (0..p.n_graphs()).collect();
    Ok(masked_col_means(p, &rows))
}

/// Mean per-row percentile rank over the rows where a model is observed.
/// Within a row the best observed model has percentile 1; ties share their
/// average rank.
pub fn gb_avgrank(p: &PerformanceMatrix) -> Result<Vec<f64>> {
    require_observed(p)?;
    let m = p.n_models();
    let mut sum = vec![0.0; m];
    let mut cnt = vec![0usize; m];
    for i in 0..p.n_graphs() {
        let entries: Vec<(usize, f64)> = p.row_entries(i).collect();
        let r = entries.len() as f64;
        for &(j, v) in &entries {
            let below = entries.iter().filter(|e| e.1 < v).count() as f64;
            let tied = entries.iter().filter(|e| e.1 == v).count() as f64;
            sum[j] += (below + (tied + 1.0) / 2.0) / r;
            cnt[j] += 1;
        }
    }
    Ok(fill_missing((0..m).map(|j| if cnt[j] == 0 { f64::NAN } else { sum[j] / cnt[j] as f64 }).collect()))
}

/// A selector that returns the same scores for every graph.
#[derive(Debug, Clone)]
pub struct FixedRanking {
    scores: Vec<f64>,
    model_ids: Vec<String>,
}

pub fn fixed_ranking(p: &PerformanceMatrix, scores: Vec<f64>) -> FixedRanking {
    FixedRanking { scores, model_ids: p.model_ids().to_vec() }
}

impl Fitted for FixedRanking {
    fn rank(&self, _m_test: &[f64]) -> Result<ScoreSheet> {
        Ok(ScoreSheet { scores: self.scores.clone(), model_ids: self.model_ids.clone() })
    }
}

/// Uniformly random ranking. The permutation is seeded by the selector seed
/// and the bits of the query, so repeated queries agree.
#[derive(Debug, Clone)]
pub struct RandomSelector {
    seed: u64,
    model_ids: Vec<String>,
}

impl RandomSelector {
    pub fn new(p: &PerformanceMatrix, seed: u64) -> RandomSelector {
        RandomSelector { seed, model_ids: p.model_ids().to_vec() }
    }
}

/// Scores for a uniformly random ranking of `m` models.
pub fn random_select(m: usize, seed: u64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut seeded(seed));
    let mut scores = vec![0.0; m];
    for (pos, &j) in order.iter().enumerate() {
        scores[j] = (m - pos) as f64 / m as f64;
    }
    scores
}

impl Fitted for RandomSelector {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        let mut h = self.seed;
        for v in m_test {
            h = derive(h, v.to_bits());
        }
        Ok(ScoreSheet { scores: random_select(self.model_ids.len(), h), model_ids: self.model_ids.clone() })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &Matrix, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows() {
        let d = sq_dist(centroids.row(c), x);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's k-means from `k` distinct seeded starting rows. Returns the
/// centroids and the assignment of each row.
pub fn kmeans(x: &Matrix, k: usize, max_iter: usize, seed: u64) -> Result<(Matrix, Vec<usize>)> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(arg_err(format!("cannot form {k} clusters from {n} rows")));
    }
    let start = rand::seq::index::sample(&mut seeded(seed), n, k).into_vec();
    let mut centroids = x.select_rows(&start);
    let mut assign: Vec<usize> = (0..n).map(|i| nearest(&centroids, x.row(i))).collect();
    for _ in 0..max_iter {
        let mut sums = Matrix::zeros(k, x.cols());
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            // an emptied cluster keeps its previous centroid
            if count > 0 {
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s / count as f64;
                }
            }
        }
        let next: Vec<usize> = (0..n).map(|i| nearest(&centroids, x.row(i))).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    Ok((centroids, assign))
}

pub const KMEANS_MAX_ITER: usize = 100;

/// Clusters the training graphs on standardized meta-features; a test graph
/// gets the average-performance ranking of its nearest cluster.
#[derive(Debug, Clone)]
pub struct Isac {
    standardizer: Standardizer,
    centroids: Matrix,
    cluster_scores: Vec<Vec<f64>>,
    model_ids: Vec<String>,
}

impl Isac {
    pub fn fit(features: &Matrix, p: &PerformanceMatrix, n_clusters: Option<usize>, seed: u64) -> Result<Isac> {
        check_features(features, p)?;
        require_observed(p)?;
        let n = p.n_graphs();
        let k = n_clusters.unwrap_or_else(|| libm::ceil(libm::sqrt(n as f64)) as usize);
        let standardizer = Standardizer::fit(features);
        let z = standardizer.transform(features);
        let (centroids, assign) = kmeans(&z, k, KMEANS_MAX_ITER, seed)?;
        let global = masked_col_means(p, &(0..n).collect::<Vec<_>>());
        let cluster_scores = (0..k)
            .map(|c| {
                let rows: Vec<usize> = (0..n).filter(|&i| assign[i] == c).collect();
                if rows.iter().any(|&i| p.row_observed_count(i) > 0) {
                    masked_col_means(p, &rows)
                } else {
                    global.clone()
                }
            })
            .collect();
        Ok(Isac { standardizer, centroids, cluster_scores, model_ids: p.model_ids().to_vec() })
    }

    pub fn cluster_of(&self, m_test: &[f64]) -> Result<usize> {
        check_query(m_test, self.standardizer.dim())?;
        Ok(nearest(&self.centroids, &self.standardizer.transform_row(m_test)))
    }
}

impl Fitted for Isac {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        let c = self.cluster_of(m_test)?;
        Ok(ScoreSheet { scores: self.cluster_scores[c].clone(), model_ids: self.model_ids.clone() })
    }
}

/// Ranks by the performance row of the most cosine-similar training graph
/// (on standardized meta-features). Unobserved entries of that row take the
/// mean of its observed entries; rows with no observations are skipped.
#[derive(Debug, Clone)]
pub struct ArgoSmart {
    standardizer: Standardizer,
    train: Matrix,
    rows: Vec<Vec<f64>>,
    model_ids: Vec<String>,
}

impl ArgoSmart {
    pub fn fit(features: &Matrix, p: &PerformanceMatrix) -> Result<ArgoSmart> {
        check_features(features, p)?;
        require_observed(p)?;
        let keep: Vec<usize> = (0..p.n_graphs()).filter(|&i| p.row_observed_count(i) > 0).collect();
        let standardizer = Standardizer::fit(features);
        let train = standardizer.transform(&features.select_rows(&keep));
        let rows = keep
            .iter()
            .map(|&i| fill_missing((0..p.n_models()).map(|j| p.get(i, j).unwrap_or(f64::NAN)).collect()))
            .collect();
        Ok(ArgoSmart { standardizer, train, rows, model_ids: p.model_ids().to_vec() })
    }

    /// Position (among training rows with observations) of the nearest graph.
    pub fn nearest(&self, m_test: &[f64]) -> Result<usize> {
        check_query(m_test, self.standardizer.dim())?;
        let z = self.standardizer.transform_row(m_test);
        let mut best = 0;
        let mut best_s = f64::NEG_INFINITY;
        for i in 0..self.train.rows() {
            let s = cosine(&z, self.train.row(i));
            if s > best_s {
                best = i;
                best_s = s;
            }
        }
        Ok(best)
    }
}

impl Fitted for ArgoSmart {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        let i = self.nearest(m_test)?;
        Ok(ScoreSheet { scores: self.rows[i].clone(), model_ids: self.model_ids.clone() })
    }
}

/// One ridge regression per model from meta-features to performance, each
/// fit on the rows where that model is observed.
#[derive(Debug, Clone)]
pub struct Surrogate {
    models: Vec<Option<FactorEstimator>>,
    fallback: f64,
    dim: usize,
    model_ids: Vec<String>,
}

impl Surrogate {
    pub fn fit(features: &Matrix, p: &PerformanceMatrix, lambda: f64) -> Result<Surrogate> {
        check_features(features, p)?;
        require_observed(p)?;
        let all: Vec<f64> = (0..p.n_graphs()).flat_map(|i| p.row_entries(i).map(|e| e.1)).collect();
        let fallback = all.iter().sum::<f64>() / all.len() as f64;
        let mut models = Vec::with_capacity(p.n_models());
        for j in 0..p.n_models() {
            let rows: Vec<usize> = (0..p.n_graphs()).filter(|&i| p.is_observed(i, j)).collect();
            if rows.len() < 2 {
                models.push(None);
                continue;
            }
            let y = Matrix::from_fn(rows.len(), 1, |r, _| p.values()[(rows[r], j)]);
            models.push(Some(fit_factor_estimator(&features.select_rows(&rows), &y, lambda)?));
        }
        Ok(Surrogate { models, fallback, dim: features.cols(), model_ids: p.model_ids().to_vec() })
    }

    pub fn predict(&self, m_test: &[f64]) -> Result<Vec<f64>> {
        check_query(m_test, self.dim)?;
        self.models
            .iter()
            .map(|m| match m {
                Some(est) => Ok(est.predict(m_test)?[0]),
                None => Ok(self.fallback),
            })
            .collect()
    }
}

impl Fitted for Surrogate {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        Ok(ScoreSheet { scores: self.predict(m_test)?, model_ids: self.model_ids.clone() })
    }
}

/// Masked factorization of `P` plus a ridge map from meta-features to graph
/// factors; scores are `φ(m) · Vᵀ`. `k` is clamped to the matrix size.
#[derive(Debug, Clone)]
pub struct Alors {
    phi: FactorEstimator,
    v: Matrix,
    model_ids: Vec<String>,
}

impl Alors {
    pub fn fit(features: &Matrix, p: &PerformanceMatrix, k: usize, lambda: f64, seed: u64) -> Result<Alors> {
        check_features(features, p)?;
        require_observed(p)?;
        let k = k.min(p.n_graphs()).min(p.n_models()).max(1);
        let f = factorize(p, k, seed)?;
        let phi = fit_factor_estimator(features, &f.u, lambda)?;
        Ok(Alors { phi, v: f.v, model_ids: p.model_ids().to_vec() })
    }
}

impl Fitted for Alors {
    fn rank(&self, m_test: &[f64]) -> Result<ScoreSheet> {
        let u = self.phi.predict(m_test)?;
        let scores = self.v.matvec(&u)?;
        Ok(ScoreSheet { scores, model_ids: self.model_ids.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ranking;

    fn pm(rows: &[&[f64]]) -> PerformanceMatrix {
        PerformanceMatrix::full(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn avgperf() {
        let p = pm(&[&[0.2, 0.9], &[0.1, 0.8]]);
        assert_eq!(ranking(&gb_avgperf(&p).unwrap())[0], 1);
        let p = pm(&[&[0.4, 0.0, 0.6], &[0.6, 0.0, 0.4]]);
        let p = p.with_mask(vec![true, false, true, true, false, true]).unwrap();
        assert_eq!(gb_avgperf(&p).unwrap(), vec![0.5, 0.5, 0.5]);
        let empty = p.with_mask(vec![false; 6]).unwrap();
        assert!(gb_avgperf(&empty).is_err());
    }

    #[test]
    fn avgrank() {
        let p = pm(&[&[0.3, 0.9, 0.5]]);
        assert_eq!(ranking(&gb_avgrank(&p).unwrap()), ranking(&gb_avgperf(&p).unwrap()));
        assert_eq!(gb_avgrank(&p).unwrap()[1], 1.0);
        let p = pm(&[&[0.2, 0.8], &[0.8, 0.2]]);
        assert_eq!(gb_avgrank(&p).unwrap(), vec![0.75, 0.75]);
        assert_eq!(ranking(&gb_avgrank(&p).unwrap()), vec![0, 1]);
    }

    #[test]
    fn argosmart_imputes_row_mean() {
        let f = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let p = pm(&[&[0.9, 0.1, 0.3], &[0.1, 0.9, 0.1]]);
        let p = p.with_mask(vec![true, false, true, true, true, true]).unwrap();
        let a = ArgoSmart::fit(&f, &p).unwrap();
        let s = a.rank(&[1.0, 0.0]).unwrap();
        assert!((s.scores[1] - 0.6).abs() < 1e-15);
        assert_eq!(s.scores[0], 0.9);
    }

    #[test]
    fn isac_single_cluster_is_avgperf() {
        let f = Matrix::from_rows(&[[1.0, 2.0], [3.0, 1.0], [0.0, 5.0]]).unwrap();
        let p = pm(&[&[0.2, 0.9, 0.4], &[0.1, 0.8, 0.9], &[0.5, 0.5, 0.6]]);
        let isac = Isac::fit(&f, &p, Some(1), 3).unwrap();
        assert_eq!(isac.rank(&[9.0, 9.0]).unwrap().scores, gb_avgperf(&p).unwrap());
        assert!(Isac::fit(&f, &p, Some(4), 3).is_err());
    }

    #[test]
    fn surrogate_constant_column() {
        let f = Matrix::from_rows(&[[1.0, 2.0], [3.0, 1.0], [0.0, 5.0], [2.0, 2.0]]).unwrap();
        let p = pm(&[&[0.7, 0.1], &[0.7, 0.5], &[0.7, 0.3], &[0.7, 0.9]]);
        let s = Surrogate::fit(&f, &p, 1e-3).unwrap();
        assert!((s.predict(&[10.0, -4.0]).unwrap()[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn random_is_permutation_and_seeded() {
        let p = pm(&[&[0.1, 0.2, 0.3, 0.4]]);
        let r = RandomSelector::new(&p, 5);
        let a = r.rank(&[1.0]).unwrap();
        assert_eq!(a, r.rank(&[1.0]).unwrap());
        let mut order = ranking(&a.scores);
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2, 3]);
        assert_eq!(random_select(1, 3), vec![1.0]);
    }
}
