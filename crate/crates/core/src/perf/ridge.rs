//! Closed-form ridge regression from meta-features to latent graph factors.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{arg_err, dim_err, Result};
use crate::linalg::{spd_solve, Matrix};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

/// Per-column z-scoring. Columns with zero variance map to 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Standardizer {
        let (n, d) = x.shape();
        let mut mean = alloc::vec![0.0; d];
        let mut scale = alloc::vec![0.0; d];
        if n == 0 {
            return Standardizer { mean, scale };
        }
        for j in 0..d {
            let first = x[(0, j)];
            if (0..n).all(|i| x[(i, j)] == first) {
                mean[j] = first;
                continue;
            }
            let mu = (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (x[(i, j)] - mu) * (x[(i, j)] - mu)).sum::<f64>() / n as f64;
            mean[j] = mu;
            scale[j] = libm::sqrt(var);
        }
        Standardizer { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| if *s == 0.0 { 0.0 } else { (x - m) / s })
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| self.transform_row(x.row(i))).collect();
        if rows.is_empty() {
            return Matrix::zeros(0, self.dim());
        }
        Matrix::from_rows(&rows).expect("rows share the width")
    }
}

/// Ridge map `φ: R^d → R^k` on standardized features. Each output dimension
/// is an independent ridge regression sharing the penalty.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorEstimator {
    /// `d x k`
    pub weights: Matrix,
    pub intercept: Vec<f64>,
    pub standardizer: Standardizer,
    pub lambda: f64,
    /// Coefficient of determination on the training targets, pooled over
    /// output dimensions.
    pub train_r2: f64,
}

impl FactorEstimator {
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.input_dim() {
            return Err(dim_err(format!(
                "estimator expects {} features, got {}",
                self.input_dim(),
                features.len()
            )));
        }
        let z = self.standardizer.transform_row(features);
        let mut out = self.intercept.clone();
        for (zj, wrow) in z.iter().zip((0..self.input_dim()).map(|j| self.weights.row(j))) {
            if *zj == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(wrow) {
                *o += zj * w;
            }
        }
        Ok(out)
    }

    pub fn predict_matrix(&self, features: &Matrix) -> Result<Matrix> {
        let rows: Result<Vec<Vec<f64>>> =
            (0..features.rows()).map(|i| self.predict(features.row(i))).collect();
        let rows = rows?;
        if rows.is_empty() {
            return Ok(Matrix::zeros(0, self.output_dim()));
        }
        Matrix::from_rows(&rows)
    }
}

/// Fits `φ` by closed-form ridge on z-scored features with an unpenalized
/// intercept. Uses the dual (kernel) form `W = Zᵀ(ZZᵀ + λI)⁻¹Y` when there are
/// fewer rows than features; it is algebraically the same estimator.
pub fn fit_factor_estimator(features: &Matrix, targets: &Matrix, lambda: f64) -> Result<FactorEstimator> {
    let (n, d) = features.shape();
    let k = targets.cols();
    if d == 0 {
        return Err(dim_err("feature dimension is 0"));
    }
    if targets.rows() != n {
        return Err(dim_err(format!("{n} feature rows but {} target rows", targets.rows())));
    }
    if n == 0 {
        return Err(crate::Error::InsufficientData("no training rows".into()));
    }
    if !(lambda > 0.0) {
        return Err(arg_err(format!("ridge penalty {lambda} must be > 0")));
    }
    let standardizer = Standardizer::fit(features);
    let z = standardizer.transform(features);
    let intercept: Vec<f64> =
        (0..k).map(|c| (0..n).map(|i| targets[(i, c)]).sum::<f64>() / n as f64).collect();
    let yc = Matrix::from_fn(n, k, |i, c| targets[(i, c)] - intercept[c]);

    let weights = if d <= n {
        let mut gram = z.matmul_at(&z)?;
        for j in 0..d {
            gram[(j, j)] += lambda;
        }
        spd_solve(&gram, &z.matmul_at(&yc)?)?
    } else {
        let mut kern = z.matmul_bt(&z)?;
        for i in 0..n {
            kern[(i, i)] += lambda;
        }
        let alpha = spd_solve(&kern, &yc)?;
        z.matmul_at(&alpha)?
    };

    let mut est = FactorEstimator { weights, intercept, standardizer, lambda, train_r2: 0.0 };
    let pred = est.predict_matrix(features)?;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        for c in 0..k {
            ss_res += (targets[(i, c)] - pred[(i, c)]) * (targets[(i, c)] - pred[(i, c)]);
            ss_tot += yc[(i, c)] * yc[(i, c)];
        }
    }
    est.train_r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(est)
}
