//! Performance matrices and the transforms built on them.

mod matrix;
mod nmf;
mod ridge;

pub use matrix::{mask_random, perturb, PerformanceMatrix};
pub use nmf::{factorize, LatentFactors, NMF_MAX_ITER, NMF_REL_TOL};
pub use ridge::{fit_factor_estimator, FactorEstimator, Standardizer, DEFAULT_RIDGE_LAMBDA};
