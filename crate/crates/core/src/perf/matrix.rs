use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;

use crate::error::{arg_err, dim_err, Result};
use crate::linalg::Matrix;
use crate::rng;

/// `n x m` matrix of model performances in `[0, 1]` with an observation mask.
/// Unobserved cells hold `0.0` and are never read.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerformanceMatrix {
    values: Matrix,
    observed: Vec<bool>,
    graph_ids: Vec<String>,
    model_ids: Vec<String>,
}

impl PerformanceMatrix {
    pub fn new(
        values: Matrix,
        observed: Vec<bool>,
        graph_ids: Vec<String>,
        model_ids: Vec<String>,
    ) -> Result<Self> {
        let (n, m) = values.shape();
        if observed.len() != n * m || graph_ids.len() != n || model_ids.len() != m {
            return Err(dim_err(format!(
                "performance matrix {n}x{m} with {} mask cells, {} graph ids, {} model ids",
                observed.len(),
                graph_ids.len(),
                model_ids.len()
            )));
        }
        let mut values = values;
        for (cell, (&obs, v)) in observed.iter().zip(values.data_mut()).enumerate() {
            if obs {
                if !(0.0..=1.0).contains(v) {
                    return Err(arg_err(format!(
                        "performance {} at ({}, {}) outside [0, 1]",
                        v,
                        cell / m,
                        cell % m
                    )));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(PerformanceMatrix { values, observed, graph_ids, model_ids })
    }

    /// Fully observed matrix with generated ids `g0..`, `m0..`.
    pub fn full(values: Matrix) -> Result<Self> {
        let (n, m) = values.shape();
        Self::new(
            values,
            alloc::vec![true; n * m],
            (0..n).map(|i| format!("g{i}")).collect(),
            (0..m).map(|j| format!("m{j}")).collect(),
        )
    }

    pub fn n_graphs(&self) -> usize {
        self.values.rows()
    }

    pub fn n_models(&self) -> usize {
        self.values.cols()
    }

    pub fn graph_ids(&self) -> &[String] {
        &self.graph_ids
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.n_models() + j]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.is_observed(i, j).then(|| self.values[(i, j)])
    }

    /// Raw values; unobserved cells read as 0.
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn row_mask(&self, i: usize) -> &[bool] {
        let m = self.n_models();
        &self.observed[i * m..(i + 1) * m]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn row_observed_count(&self, i: usize) -> usize {
        self.row_mask(i).iter().filter(|&&o| o).count()
    }

    pub fn col_observed_count(&self, j: usize) -> usize {
        (0..self.n_graphs()).filter(|&i| self.is_observed(i, j)).count()
    }

    /// Observed `(model, value)` pairs of row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n_models()).filter_map(move |j| self.get(i, j).map(|v| (j, v)))
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> PerformanceMatrix {
        let m = self.n_models();
        let mut observed = Vec::with_capacity(rows.len() * m);
        for &i in rows {
            observed.extend_from_slice(self.row_mask(i));
        }
        PerformanceMatrix {
            values: self.values.select_rows(rows),
            observed,
            graph_ids: rows.iter().map(|&i| self.graph_ids[i].clone()).collect(),
            model_ids: self.model_ids.clone(),
        }
    }

    /// Same values with a different mask (cells newly observed must already be
    /// valid values).
    pub fn with_mask(&self, observed: Vec<bool>) -> Result<PerformanceMatrix> {
        PerformanceMatrix::new(
            self.values.clone(),
            observed,
            self.graph_ids.clone(),
            self.model_ids.clone(),
        )
    }
}

/// Hides exactly `floor(sparsity * observed)` observed cells, chosen
/// uniformly at random. Values are untouched.
pub fn mask_random(p: &PerformanceMatrix, sparsity: f64, seed: u64) -> Result<PerformanceMatrix> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(arg_err(format!("sparsity {sparsity} outside [0, 1)")));
    }
    let cells: Vec<usize> = (0..p.observed.len()).filter(|&c| p.observed[c]).collect();
    let hide = libm::floor(sparsity * cells.len() as f64) as usize;
    let mut rng = rng::seeded(seed);
    let mut observed = p.observed.clone();
    for k in index::sample(&mut rng, cells.len(), hide).into_iter() {
        observed[cells[k]] = false;
    }
    Ok(PerformanceMatrix { observed, ..p.clone() })
}

/// Replaces every observed entry `x` by a uniform draw from
/// `[x (1 - r/2), x (1 + r/2)]`, clipped to `[0, 1]`.
pub fn perturb(p: &PerformanceMatrix, rate: f64, seed: u64) -> Result<PerformanceMatrix> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(arg_err(format!("perturbation rate {rate} must be >= 0")));
    }
    let mut rng = rng::seeded(seed);
    let mut out = p.clone();
    for (v, &obs) in out.values.data_mut().iter_mut().zip(&p.observed) {
        if !obs {
            continue;
        }
        let lo = *v * (1.0 - rate / 2.0);
        let hi = *v * (1.0 + rate / 2.0);
        let u: f64 = rng.gen();
        *v = (lo + (hi - lo) * u).clamp(0.0, 1.0);
    }
    Ok(out)
}
