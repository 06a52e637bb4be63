//! Expectation-maximization for a multivariate normal with missing entries.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::mean::mean_filled;
use super::{CompleteMatrix, Convergence, CovarianceEstimate};
use crate::dataset::{ml_moments, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NAME: &str = "EM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Relative change of the observed-data log-likelihood that ends iteration.
    pub tol: f64,
    /// Added to the diagonal of the initial covariance, and to singular
    /// observed blocks before giving up.
    pub ridge: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { max_iter: 100, tol: 1e-6, ridge: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct EmOutput<T: Scalar> {
    /// Model mean and covariance at the last iterate.
    pub covariance: CovarianceEstimate<T>,
    /// Conditional means under the returned model in place of missing cells.
    pub completed: CompleteMatrix<T>,
    /// Observed-data log-likelihood of every parameter iterate, starting from
    /// the initial guess and ending with the returned parameters.
    pub log_likelihood: Vec<T>,
}

struct EStep<T: Scalar> {
    log_likelihood: T,
    filled: DMatrix<T>,
    /// Sum over rows of the conditional covariance of the missing block.
    cond_cov: DMatrix<T>,
}

pub fn em_estimate<T: Scalar>(ds: &Dataset<T>, cfg: &EmConfig) -> Result<EmOutput<T>> {
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("EM max_iter must be positive".into()));
    }
    ds.require_observed(2)?;
    let d = ds.n_features();
    let ridge = T::lit(cfg.ridge);
    let tol = T::lit(cfg.tol);

    let patterns = group_patterns(ds);
    let mut mean = DVector::from_fn(d, |j, _| ds.observed_moments(j).expect("observed").0);
    let (_, mut cov) = ml_moments(&mean_filled(ds)?);
    for j in 0..d {
        cov[(j, j)] += ridge;
    }

    let mut trace: Vec<T> = Vec::new();
    let mut convergence = Convergence { iterations: 0, converged: false };
    for it in 1..=cfg.max_iter {
        let e = e_step(ds, &patterns, &mean, &cov, ridge)?;
        let ll = e.log_likelihood;
        (mean, cov) = m_step(&e);
        convergence.iterations = it;
        let prev = trace.last().copied();
        trace.push(ll);
        if let Some(prev) = prev {
            if (ll - prev).abs() <= tol * prev.abs() {
                convergence.converged = true;
                break;
            }
        }
    }
    let last = e_step(ds, &patterns, &mean, &cov, ridge)?;
    trace.push(last.log_likelihood);

    let mut covariance = CovarianceEstimate::dense(mean, cov, NAME);
    covariance.convergence = Some(convergence);
    let mut filled = last.filled;
    CompleteMatrix::restore_observed(&mut filled, ds);
    Ok(EmOutput {
        covariance,
        completed: CompleteMatrix::new(filled, NAME, Some(convergence)),
        log_likelihood: trace,
    })
}

/// Observed-data log-likelihood of `(mean, cov)`.
pub fn observed_log_likelihood<T: Scalar>(ds: &Dataset<T>, mean: &DVector<T>, cov: &DMatrix<T>) -> Result<T> {
    Ok(e_step(ds, &group_patterns(ds), mean, cov, T::zero())?.log_likelihood)
}

/// Rows grouped by observedness pattern, in a deterministic order.
fn group_patterns<T: Scalar>(ds: &Dataset<T>) -> BTreeMap<Vec<bool>, Vec<usize>> {
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for i in 0..ds.n_samples() {
        let key: Vec<bool> = (0..ds.n_features()).map(|j| ds.is_observed(i, j)).collect();
        groups.entry(key).or_default().push(i);
    }
    groups
}

fn factor<T: Scalar>(block: DMatrix<T>, ridge: T, row: usize) -> Result<Cholesky<T, Dyn>> {
    if let Some(c) = Cholesky::new(block.clone()) {
        return Ok(c);
    }
    let k = block.nrows();
    Cholesky::new(block + DMatrix::identity(k, k) * ridge).ok_or(Error::Singular { row })
}

fn e_step<T: Scalar>(
    ds: &Dataset<T>,
    patterns: &BTreeMap<Vec<bool>, Vec<usize>>,
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    ridge: T,
) -> Result<EStep<T>> {
    let (n, d) = (ds.n_samples(), ds.n_features());
    let mut filled = ds.values().clone();
    let mut cond_cov = DMatrix::zeros(d, d);
    let mut ll = T::zero();
    let ln_2pi = T::two_pi().ln();
    let half = T::lit(0.5);

    for (pattern, rows) in patterns {
        let obs: Vec<usize> = (0..d).filter(|&j| pattern[j]).collect();
        let mis: Vec<usize> = (0..d).filter(|&j| !pattern[j]).collect();
        if obs.is_empty() {
            for &i in rows {
                for &j in &mis {
                    filled[(i, j)] = mean[j];
                }
            }
            cond_cov += cov * T::from_usize_lossy(rows.len());
            continue;
        }
        let s_oo = cov.select_rows(&obs).select_columns(&obs);
        let chol = factor(s_oo, ridge, rows[0])?;
        let log_det = chol.l_dirty().diagonal().iter().fold(T::zero(), |s, &l| s + l.ln()) * T::lit(2.0);
        let const_term = T::from_usize_lossy(obs.len()) * ln_2pi + log_det;

        // Regression coefficients of the missing block on the observed block.
        let (s_mo, c_mm) = if mis.is_empty() {
            (DMatrix::zeros(0, obs.len()), DMatrix::zeros(0, 0))
        } else {
            let s_mo = cov.select_rows(&mis).select_columns(&obs);
            let s_mm = cov.select_rows(&mis).select_columns(&mis);
            let solved = chol.solve(&s_mo.transpose()); // Σ_oo⁻¹ Σ_om
            let c_mm = &s_mm - &s_mo * &solved;
            (s_mo, c_mm)
        };

        for &i in rows {
            let resid = DVector::from_iterator(obs.len(), obs.iter().map(|&j| ds.values()[(i, j)] - mean[j]));
            let w = chol.solve(&resid);
            ll -= half * (const_term + resid.dot(&w));
            if !mis.is_empty() {
                let cond = &s_mo * &w;
                for (a, &j) in mis.iter().enumerate() {
                    filled[(i, j)] = mean[j] + cond[a];
                }
            }
        }
        if !mis.is_empty() {
            let weight = T::from_usize_lossy(rows.len());
            for (a, &ja) in mis.iter().enumerate() {
                for (b, &jb) in mis.iter().enumerate() {
                    cond_cov[(ja, jb)] += c_mm[(a, b)] * weight;
                }
            }
        }
    }
    debug_assert_eq!(filled.nrows(), n);
    Ok(EStep { log_likelihood: ll, filled, cond_cov })
}

fn m_step<T: Scalar>(e: &EStep<T>) -> (DVector<T>, DMatrix<T>) {
    let (n, d) = e.filled.shape();
    let nf = T::from_usize_lossy(n);
    let mean = DVector::from_fn(d, |j, _| e.filled.column(j).iter().fold(T::zero(), |s, &v| s + v) / nf);
    let centred = DMatrix::from_fn(n, d, |i, j| e.filled[(i, j)] - mean[j]);
    let mut cov = (centred.transpose() * &centred + &e.cond_cov) / nf;
    // Exact symmetry.
    for a in 0..d {
        for b in 0..a {
            let s = (cov[(a, b)] + cov[(b, a)]) * T::lit(0.5);
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::complete_moments;
    use crate::estimators::test_support::{assert_pass_through, gaussian, gaussian_mcar};

    #[test]
    fn complete_data_gives_ml_moments() {
        let ds = gaussian(80, 4, 1);
        let out = em_estimate(&ds, &EmConfig::default()).unwrap();
        let (mean, cov) = complete_moments(&ds).unwrap();
        assert!((&out.covariance.mean - &mean).amax() < 1e-8);
        assert!((&out.covariance.cov - &cov).amax() < 1e-8);
        assert_eq!(&out.completed.values, ds.values());
    }

    #[test]
    fn log_likelihood_nondecreasing() {
        for seed in 0..10 {
            let (_, ds) = gaussian_mcar(100, 5, 0.3, seed);
            let out = em_estimate(&ds, &EmConfig::default()).unwrap();
            for w in out.log_likelihood.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn trace_matches_independent_likelihood() {
        let (_, ds) = gaussian_mcar(50, 3, 0.3, 4);
        let out = em_estimate(&ds, &EmConfig::default()).unwrap();
        let direct = naive_log_likelihood(&ds, &out.covariance.mean, &out.covariance.cov);
        assert!((direct - out.log_likelihood.last().unwrap()).abs() < 1e-9 * direct.abs());
    }

    /// Row-by-row Gaussian density with an explicit inverse and determinant.
    fn naive_log_likelihood(ds: &Dataset<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let mut ll = 0.0;
        for i in 0..ds.n_samples() {
            let obs: Vec<usize> = (0..ds.n_features()).filter(|&j| ds.is_observed(i, j)).collect();
            if obs.is_empty() {
                continue;
            }
            let s = cov.select_rows(&obs).select_columns(&obs);
            let r = DVector::from_iterator(obs.len(), obs.iter().map(|&j| ds.values()[(i, j)] - mean[j]));
            let q = (r.transpose() * s.clone().try_inverse().unwrap() * &r)[0];
            ll += -0.5 * (obs.len() as f64 * (2.0 * std::f64::consts::PI).ln() + s.determinant().ln() + q);
        }
        ll
    }

    #[test]
    fn two_feature_fill_is_conditional_mean() {
        let ds = Dataset::<f64>::from_rows(&[
            vec![Some(1.0), Some(2.1)],
            vec![Some(2.0), Some(3.9)],
            vec![Some(3.0), Some(6.2)],
            vec![Some(4.0), Some(7.8)],
            vec![Some(2.5), None],
        ])
        .unwrap();
        let cfg = EmConfig { max_iter: 1000, tol: 1e-14, ..EmConfig::default() };
        let out = em_estimate(&ds, &cfg).unwrap();
        let (mu, s) = (&out.covariance.mean, &out.covariance.cov);
        let expected = mu[1] + s[(0, 1)] / s[(0, 0)] * (2.5 - mu[0]);
        assert!((out.completed.values[(4, 1)] - expected).abs() < 1e-10);
        assert!(out.covariance.convergence.unwrap().converged);
    }

    #[test]
    fn observed_cells_pass_through() {
        let (_, ds) = gaussian_mcar(60, 4, 0.3, 9);
        let out = em_estimate(&ds, &EmConfig::default()).unwrap();
        assert_pass_through(&ds, &out.completed.values);
        let c = &out.covariance.cov;
        assert_eq!(c, &c.transpose());
        assert!(c.diagonal().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn fully_missing_row_uses_mean() {
        let ds = Dataset::<f64>::from_rows(&[
            vec![Some(1.0), Some(2.0)],
            vec![Some(2.0), Some(1.0)],
            vec![Some(3.0), Some(5.0)],
            vec![None, None],
        ])
        .unwrap();
        let out = em_estimate(&ds, &EmConfig::default()).unwrap();
        let mu = &out.covariance.mean;
        assert!((out.completed.values[(3, 0)] - mu[0]).abs() < 1e-12);
        assert!((out.completed.values[(3, 1)] - mu[1]).abs() < 1e-12);
    }
}
