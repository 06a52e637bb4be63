//! Chained-equations imputation with ridge-regularized linear regressions.
//!
//! Deterministic single imputation: each missing cell receives the
//! regression prediction, with no posterior draws.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mean::mean_filled;
use super::{CompleteMatrix, Convergence};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::missingness::rng_from_seed;
use crate::scalar::Scalar;

pub const NAME: &str = "MICE";

/// Order in which features are visited within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputationOrder {
    /// Fewest missing cells first, ties by feature index.
    #[default]
    Ascending,
    /// A fresh seeded shuffle every sweep.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiceConfig {
    pub max_iter: usize,
    /// Stop once no filled cell moves by this much in a sweep.
    pub tol: f64,
    pub ridge: f64,
    pub order: ImputationOrder,
    /// Only used by [`ImputationOrder::Random`]; supplied by the caller, not the config file.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for MiceConfig {
    fn default() -> Self {
        MiceConfig { max_iter: 10, tol: 1e-4, ridge: 1e-6, order: ImputationOrder::Ascending, seed: 0 }
    }
}

pub fn impute_mice<T: Scalar>(ds: &Dataset<T>, cfg: &MiceConfig) -> Result<CompleteMatrix<T>> {
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("MICE max_iter must be positive".into()));
    }
    ds.require_observed(2)?;
    let (n, d) = (ds.n_samples(), ds.n_features());
    let mut x = mean_filled(ds)?;

    let missing_counts: Vec<usize> = (0..d).map(|j| n - ds.observed_in_column(j)).collect();
    let mut order: Vec<usize> = (0..d).filter(|&j| missing_counts[j] > 0).collect();
    order.sort_by_key(|&j| (missing_counts[j], j));
    if order.is_empty() {
        return Ok(CompleteMatrix::new(x, NAME, Some(Convergence { iterations: 0, converged: true })));
    }

    let mut rng = rng_from_seed(cfg.seed);
    let ridge = T::lit(cfg.ridge);
    let tol = T::lit(cfg.tol);
    let mut convergence = Convergence { iterations: 0, converged: false };
    for sweep in 1..=cfg.max_iter {
        if cfg.order == ImputationOrder::Random {
            order.shuffle(&mut rng);
        }
        let mut max_change = T::zero();
        for &j in &order {
            let fills = regress_feature(ds, &x, j, ridge)?;
            for (i, v) in fills {
                max_change = max_change.max((x[(i, j)] - v).abs());
                x[(i, j)] = v;
            }
        }
        convergence.iterations = sweep;
        if max_change < tol {
            convergence.converged = true;
            break;
        }
    }
    Ok(CompleteMatrix::new(x, NAME, Some(convergence)))
}

/// Fits feature `target` on all other columns of `x` over the rows where it
/// was originally observed; returns predictions for its missing rows.
fn regress_feature<T: Scalar>(ds: &Dataset<T>, x: &DMatrix<T>, target: usize, ridge: T) -> Result<Vec<(usize, T)>> {
    let (n, d) = x.shape();
    let predictors: Vec<usize> = (0..d).filter(|&p| p != target).collect();
    let train: Vec<usize> = (0..n).filter(|&i| ds.is_observed(i, target)).collect();
    let missing: Vec<usize> = (0..n).filter(|&i| !ds.is_observed(i, target)).collect();
    let m = T::from_usize_lossy(train.len());

    let y_mean = train.iter().fold(T::zero(), |s, &i| s + x[(i, target)]) / m;
    let x_mean: Vec<T> = predictors.iter().map(|&p| train.iter().fold(T::zero(), |s, &i| s + x[(i, p)]) / m).collect();

    let k = predictors.len();
    let mut gram = DMatrix::<T>::zeros(k, k);
    let mut rhs = DVector::<T>::zeros(k);
    for &i in &train {
        let yc = x[(i, target)] - y_mean;
        for (a, &pa) in predictors.iter().enumerate() {
            let xa = x[(i, pa)] - x_mean[a];
            rhs[a] += xa * yc;
            for (b, &pb) in predictors.iter().enumerate().skip(a) {
                gram[(a, b)] += xa * (x[(i, pb)] - x_mean[b]);
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += ridge;
    }
    let beta = if k == 0 {
        DVector::zeros(0)
    } else {
        gram.cholesky()
            .ok_or(Error::Singular { row: target })?
            .solve(&rhs)
    };

    Ok(missing
        .into_iter()
        .map(|i| {
            let pred = predictors
                .iter()
                .enumerate()
                .fold(y_mean, |s, (a, &p)| s + beta[a] * (x[(i, p)] - x_mean[a]));
            (i, pred)
        })
        .collect())
}
