use super::CompleteMatrix;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::scalar::Scalar;

pub const NAME: &str = "Mean Impute";

/// Fills each missing cell with the mean of its feature's observed cells.
pub fn impute_mean<T: Scalar>(ds: &Dataset<T>) -> Result<CompleteMatrix<T>> {
    Ok(CompleteMatrix::new(mean_filled(ds)?, NAME, None))
}

pub(crate) fn mean_filled<T: Scalar>(ds: &Dataset<T>) -> Result<nalgebra::DMatrix<T>> {
    ds.require_observed(1)?;
    let mut values = ds.values().clone();
    for j in 0..ds.n_features() {
        let (mean, _) = ds.observed_moments(j).expect("feature has observed cells");
        for i in 0..ds.n_samples() {
            if !ds.is_observed(i, j) {
                values[(i, j)] = mean;
            }
        }
    }
    Ok(values)
}
