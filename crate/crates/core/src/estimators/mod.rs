//! Correlation estimators for incomplete data.
//!
//! Imputers ([`mean`], [`knn`], [`mice`], [`softimpute`], [`pca`],
//! [`external`]) fill the missing cells and return a [`CompleteMatrix`];
//! [`dper`] estimates the covariance directly. [`em`] produces both. Either
//! result becomes a [`CorrelationMatrix`] through [`correlate`].

pub mod cubic;
pub mod dper;
pub mod em;
pub mod external;
pub mod knn;
pub mod mean;
pub mod mice;
pub mod pca;
pub mod softimpute;

mod correlate;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::metrics::CorrelationMatrix;
use crate::scalar::Scalar;

pub use correlate::{correlate, correlate_complete, correlate_covariance, ground_truth, VARIANCE_FLOOR};

/// Iteration count and whether the stopping tolerance was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub converged: bool,
}

/// A matrix with every cell filled; observed input cells are passed through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteMatrix<T: Scalar> {
    pub values: DMatrix<T>,
    pub source_method: String,
    pub convergence: Option<Convergence>,
}

impl<T: Scalar> CompleteMatrix<T> {
    pub(crate) fn new(values: DMatrix<T>, method: &str, convergence: Option<Convergence>) -> Self {
        CompleteMatrix { values, source_method: method.to_owned(), convergence }
    }

    /// Copies the observed cells of `ds` over `values`.
    pub(crate) fn restore_observed(values: &mut DMatrix<T>, ds: &Dataset<T>) {
        for j in 0..ds.n_features() {
            for i in 0..ds.n_samples() {
                if ds.is_observed(i, j) {
                    values[(i, j)] = ds.values()[(i, j)];
                }
            }
        }
    }
}

/// Mean vector and symmetric covariance; entries flagged in `null_mask`
/// could not be estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<T: Scalar> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
    pub null_mask: DMatrix<bool>,
    pub method: String,
    pub convergence: Option<Convergence>,
}

impl<T: Scalar> CovarianceEstimate<T> {
    pub fn dense(mean: DVector<T>, cov: DMatrix<T>, method: &str) -> Self {
        let d = cov.nrows();
        CovarianceEstimate {
            mean,
            cov,
            null_mask: DMatrix::from_element(d, d, false),
            method: method.to_owned(),
            convergence: None,
        }
    }
}

/// Output of any estimator: either route to a correlation matrix.
#[derive(Debug, Clone)]
pub enum Estimate<T: Scalar> {
    Imputed(CompleteMatrix<T>),
    Covariance(CovarianceEstimate<T>),
}

impl<T: Scalar> Estimate<T> {
    pub fn correlation(&self) -> CorrelationMatrix<T> {
        correlate(self)
    }

    pub fn convergence(&self) -> Option<Convergence> {
        match self {
            Estimate::Imputed(c) => c.convergence,
            Estimate::Covariance(c) => c.convergence,
        }
    }
}

impl<T: Scalar> From<CompleteMatrix<T>> for Estimate<T> {
    fn from(c: CompleteMatrix<T>) -> Self {
        Estimate::Imputed(c)
    }
}

impl<T: Scalar> From<CovarianceEstimate<T>> for Estimate<T> {
    fn from(c: CovarianceEstimate<T>) -> Self {
        Estimate::Covariance(c)
    }
}

/// A built-in method with its hyperparameters.
///
/// Serialized with a `method` tag, e.g. `{"method": "knn", "k": 5}`; omitted
/// fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    Mean,
    Knn {
        #[serde(default = "knn::default_k")]
        k: usize,
    },
    Mice(mice::MiceConfig),
    Em(em::EmConfig),
    #[serde(rename = "softimpute")]
    SoftImpute(softimpute::SoftImputeConfig),
    #[serde(rename = "imputepca")]
    ImputePca(pca::PcaConfig),
    Dper,
}

impl Estimator {
    /// The seven built-in methods with default settings.
    pub fn all_defaults() -> Vec<Estimator> {
        vec![
            Estimator::Mean,
            Estimator::Knn { k: knn::default_k() },
            Estimator::Mice(Default::default()),
            Estimator::SoftImpute(Default::default()),
            Estimator::ImputePca(Default::default()),
            Estimator::Em(Default::default()),
            Estimator::Dper,
        ]
    }

    /// Display name used in figures and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Mean => mean::NAME,
            Estimator::Knn { .. } => knn::NAME,
            Estimator::Mice(_) => mice::NAME,
            Estimator::Em(_) => em::NAME,
            Estimator::SoftImpute(_) => softimpute::NAME,
            Estimator::ImputePca(_) => pca::NAME,
            Estimator::Dper => dper::NAME,
        }
    }

    /// Runs the method. `seed` only matters for methods with a random component.
    pub fn estimate<T: Scalar>(&self, ds: &Dataset<T>, seed: u64) -> Result<Estimate<T>> {
        Ok(match self {
            Estimator::Mean => mean::impute_mean(ds)?.into(),
            Estimator::Knn { k } => knn::impute_knn(ds, *k)?.into(),
            Estimator::Mice(cfg) => mice::impute_mice(ds, &mice::MiceConfig { seed, ..cfg.clone() })?.into(),
            // The model covariance, not a re-estimate from the filled matrix.
            Estimator::Em(cfg) => em::em_estimate(ds, cfg)?.covariance.into(),
            Estimator::SoftImpute(cfg) => softimpute::impute_softimpute(ds, cfg)?.completed.into(),
            Estimator::ImputePca(cfg) => pca::impute_pca(ds, cfg)?.into(),
            Estimator::Dper => dper::dper_estimate(ds)?.into(),
        })
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use crate::dataset::Dataset;
    use crate::missingness::apply_random;

    /// `n` draws from a correlated Gaussian: x = z * L with a fixed random mixing matrix.
    pub fn gaussian(n: usize, d: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let z = DMatrix::<f64>::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng));
        Dataset::complete(z * mix).unwrap()
    }

    pub fn gaussian_mcar(n: usize, d: usize, rate: f64, seed: u64) -> (Dataset<f64>, Dataset<f64>) {
        let full = gaussian(n, d, seed);
        let masked = apply_random(&full, rate, seed.wrapping_add(1)).unwrap();
        (full, masked)
    }

    /// Asserts the observed-pass-through rule bit-exactly.
    pub fn assert_pass_through(ds: &Dataset<f64>, out: &DMatrix<f64>) {
        for i in 0..ds.n_samples() {
            for j in 0..ds.n_features() {
                if let Some(v) = ds.get(i, j) {
                    assert_eq!(v.to_bits(), out[(i, j)].to_bits(), "cell ({i},{j}) altered");
                }
            }
        }
    }
}
