//! Missing-value-aware non-negative matrix factorization `P ≈ U Vᵀ`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use super::PerformanceMatrix;
use crate::error::{arg_err, Error, Result};
use crate::linalg::Matrix;
use crate::rng;

pub const NMF_MAX_ITER: usize = 500;
/// Stop once the relative objective improvement drops below this.
pub const NMF_REL_TOL: f64 = 1e-6;
const DENOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatentFactors {
    /// Graph factors, `n x k`.
    pub u: Matrix,
    /// Model factors, `m x k`.
    pub v: Matrix,
    pub k: usize,
    /// Rows without observations; excluded from the fit and given the mean
    /// factor of the fitted rows.
    pub dropped_rows: Vec<usize>,
    pub dropped_cols: Vec<usize>,
    /// Masked objective `½ Σ_obs (p - uᵀv)²` after each iteration.
    pub objective: Vec<f64>,
}

impl LatentFactors {
    /// `U Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        self.u.matmul_bt(&self.v).expect("factor shapes agree")
    }

    /// Root-mean-square error over observed cells of `p`.
    pub fn observed_rmse(&self, p: &PerformanceMatrix) -> f64 {
        let r = self.reconstruct();
        let (mut se, mut cnt) = (0.0, 0usize);
        for i in 0..p.n_graphs() {
            for (j, x) in p.row_entries(i) {
                se += (x - r[(i, j)]) * (x - r[(i, j)]);
                cnt += 1;
            }
        }
        if cnt == 0 {
            0.0
        } else {
            libm::sqrt(se / cnt as f64)
        }
    }
}

fn masked_objective(p: &Matrix, mask: &[bool], u: &Matrix, v: &Matrix) -> f64 {
    let m = p.cols();
    let mut obj = 0.0;
    for i in 0..p.rows() {
        for j in 0..m {
            if mask[i * m + j] {
                let r = p[(i, j)] - crate::linalg::dot(u.row(i), v.row(j));
                obj += r * r;
            }
        }
    }
    0.5 * obj
}

/// Multiplicative-update NMF over observed cells only.
///
/// Updates `U ← U ⊙ (M⊙P)V / (M⊙UVᵀ)V` and `V ← V ⊙ (M⊙P)ᵀU / (M⊙UVᵀ)ᵀU`,
/// which never increase the masked squared error. Initialization is
/// `uniform(0, 1) / √k` from `seed`.
pub fn factorize(p: &PerformanceMatrix, k: usize, seed: u64) -> Result<LatentFactors> {
    let (n, m) = (p.n_graphs(), p.n_models());
    if k == 0 {
        return Err(arg_err("factorization rank must be at least 1"));
    }
    if k > n.min(m) {
        return Err(arg_err(format!("rank {k} exceeds min(n, m) = {}", n.min(m))));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| p.row_observed_count(i) > 0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| p.col_observed_count(j) > 0).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("performance matrix has no observed cells".into()));
    }
    let dropped_rows: Vec<usize> = (0..n).filter(|i| !rows.contains(i)).collect();
    let dropped_cols: Vec<usize> = (0..m).filter(|j| !cols.contains(j)).collect();

    let (nr, nc) = (rows.len(), cols.len());
    let sub = Matrix::from_fn(nr, nc, |a, b| p.values()[(rows[a], cols[b])]);
    let mut mask = Vec::with_capacity(nr * nc);
    for &i in &rows {
        for &j in &cols {
            mask.push(p.is_observed(i, j));
        }
    }

    let mut rng = rng::seeded(seed);
    let scale = 1.0 / libm::sqrt(k as f64);
    let mut u = Matrix::from_fn(nr, k, |_, _| rng.gen::<f64>() * scale);
    let mut v = Matrix::from_fn(nc, k, |_, _| rng.gen::<f64>() * scale);

    let mut objective = Vec::new();
    let mut prev = masked_objective(&sub, &mask, &u, &v);
    let mut recon = Matrix::zeros(nr, nc);
    for _ in 0..NMF_MAX_ITER {
        // U update
        fill_masked_recon(&mut recon, &mask, &u, &v);
        let num = masked(&sub, &mask).matmul(&v)?;
        let den = recon.matmul(&v)?;
        for (x, (a, b)) in u.data_mut().iter_mut().zip(num.data().iter().zip(den.data())) {
            *x *= a / (b + DENOM_EPS);
        }
        // V update
        fill_masked_recon(&mut recon, &mask, &u, &v);
        let num = masked(&sub, &mask).matmul_at(&u)?;
        let den = recon.matmul_at(&u)?;
        for (x, (a, b)) in v.data_mut().iter_mut().zip(num.data().iter().zip(den.data())) {
            *x *= a / (b + DENOM_EPS);
        }
        let cur = masked_objective(&sub, &mask, &u, &v);
        objective.push(cur);
        let improvement = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
        prev = cur;
        if cur == 0.0 || improvement < NMF_REL_TOL {
            break;
        }
    }

    let mean_row = |mat: &Matrix| -> Vec<f64> {
        let mut acc = alloc::vec![0.0; k];
        for r in 0..mat.rows() {
            for (a, x) in acc.iter_mut().zip(mat.row(r)) {
                *a += x;
            }
        }
        acc.iter().map(|a| a / mat.rows() as f64).collect()
    };
    let (u_fill, v_fill) = (mean_row(&u), mean_row(&v));
    let mut full_u = Matrix::zeros(n, k);
    for i in 0..n {
        match rows.binary_search(&i) {
            Ok(a) => full_u.row_mut(i).copy_from_slice(u.row(a)),
            Err(_) => full_u.row_mut(i).copy_from_slice(&u_fill),
        }
    }
    let mut full_v = Matrix::zeros(m, k);
    for j in 0..m {
        match cols.binary_search(&j) {
            Ok(b) => full_v.row_mut(j).copy_from_slice(v.row(b)),
            Err(_) => full_v.row_mut(j).copy_from_slice(&v_fill),
        }
    }
    Ok(LatentFactors { u: full_u, v: full_v, k, dropped_rows, dropped_cols, objective })
}

fn masked(p: &Matrix, mask: &[bool]) -> Matrix {
    let mut out = p.clone();
    for (x, &o) in out.data_mut().iter_mut().zip(mask) {
        if !o {
            *x = 0.0;
        }
    }
    out
}

fn fill_masked_recon(out: &mut Matrix, mask: &[bool], u: &Matrix, v: &Matrix) {
    let nc = out.cols();
    for i in 0..out.rows() {
        for j in 0..nc {
            out[(i, j)] = if mask[i * nc + j] {
                crate::linalg::dot(u.row(i), v.row(j))
            } else {
                0.0
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matrix_rank_one() {
        let p = PerformanceMatrix::full(Matrix::filled(6, 4, 0.5)).unwrap();
        let f = factorize(&p, 1, 3).unwrap();
        assert!(f.reconstruct().data().iter().all(|x| (x - 0.5).abs() < 1e-3));
    }

    #[test]
    fn rank_errors() {
        let p = PerformanceMatrix::full(Matrix::filled(3, 2, 0.5)).unwrap();
        assert!(factorize(&p, 3, 0).is_err());
        assert!(factorize(&p, 0, 0).is_err());
        let empty = p.with_mask(alloc::vec![false; 6]).unwrap();
        assert!(matches!(factorize(&empty, 1, 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn dropped_rows_get_mean_factor() {
        let p = PerformanceMatrix::full(Matrix::from_fn(4, 3, |i, j| 0.2 + 0.1 * (i + j) as f64))
            .unwrap();
        let mut mask = alloc::vec![true; 12];
        for j in 0..3 {
            mask[3 * 3 + j] = false;
        }
        mask[2] = false; // column 2 still observed elsewhere
        let f = factorize(&p.with_mask(mask).unwrap(), 2, 1).unwrap();
        assert_eq!(f.dropped_rows, alloc::vec![3]);
        assert!(f.dropped_cols.is_empty());
        for c in 0..2 {
            let mean = (0..3).map(|i| f.u[(i, c)]).sum::<f64>() / 3.0;
            assert!((f.u[(3, c)] - mean).abs() < 1e-15);
        }
    }
}
