//! Correlation matrices from incomplete data.
//!
//! Two routes lead to a [`CorrelationMatrix`]: impute the missing cells and
//! correlate the completed matrix, or estimate the covariance directly from
//! the observed entries. The [`metrics`] module scores either route against
//! the complete-data ground truth and [`render`] draws the heatmap and
//! line-chart figures as standalone SVG.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod metrics;
pub mod missingness;
pub mod render;
pub mod scalar;

pub use dataset::{complete_moments, load_csv, normalize, write_csv, Dataset, NormalizationMode, NormalizationSpec};
pub use error::{Error, ErrorKind, Result};
pub use estimators::{
    correlate, ground_truth, CompleteMatrix, Convergence, CovarianceEstimate, Estimate, Estimator,
};
pub use metrics::{
    dense_rank, local_abs_diff, local_signed_diff, order_methods, rmse_corr, CorrelationMatrix,
    MaskedMatrix, MethodResult, RateResult,
};
pub use missingness::{apply_monotone_block, apply_random, missing_rate, Corner};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type CompleteMatrix64 = CompleteMatrix<f64>;
pub type CompleteMatrix32 = CompleteMatrix<f32>;
pub type CovarianceEstimate64 = CovarianceEstimate<f64>;
pub type CovarianceEstimate32 = CovarianceEstimate<f32>;
pub type CorrelationMatrix64 = CorrelationMatrix<f64>;
pub type CorrelationMatrix32 = CorrelationMatrix<f32>;
pub type MaskedMatrix64 = MaskedMatrix<f64>;
pub type MethodResult64 = MethodResult<f64>;
