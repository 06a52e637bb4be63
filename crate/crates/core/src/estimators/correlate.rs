use nalgebra::DMatrix;

use super::{CompleteMatrix, CovarianceEstimate, Estimate};
use crate::dataset::{ml_moments, Dataset};
use crate::error::{Error, Result};
use crate::metrics::CorrelationMatrix;
use crate::scalar::Scalar;

/// Variances below this make a feature's correlations undefined.
pub const VARIANCE_FLOOR: f64 = 1e-12;

pub fn correlate<T: Scalar>(source: &Estimate<T>) -> CorrelationMatrix<T> {
    match source {
        Estimate::Imputed(c) => correlate_complete(c),
        Estimate::Covariance(c) => correlate_covariance(c),
    }
}

/// Correlation of the ML covariance of a completed matrix.
pub fn correlate_complete<T: Scalar>(source: &CompleteMatrix<T>) -> CorrelationMatrix<T> {
    let (_, cov) = ml_moments(&source.values);
    let d = cov.nrows();
    from_covariance(&cov, &DMatrix::from_element(d, d, false))
}

/// Correlation of a fully observed dataset: the reference every estimate is scored against.
pub fn ground_truth<T: Scalar>(ds: &Dataset<T>) -> Result<CorrelationMatrix<T>> {
    let missing = ds.missing_count();
    if missing > 0 {
        return Err(Error::NotComplete { missing });
    }
    let (_, cov) = ml_moments(ds.values());
    let d = cov.nrows();
    Ok(from_covariance(&cov, &DMatrix::from_element(d, d, false)))
}

pub fn correlate_covariance<T: Scalar>(source: &CovarianceEstimate<T>) -> CorrelationMatrix<T> {
    from_covariance(&source.cov, &source.null_mask)
}

fn from_covariance<T: Scalar>(cov: &DMatrix<T>, null_cov: &DMatrix<bool>) -> CorrelationMatrix<T> {
    let d = cov.nrows();
    let floor = T::lit(VARIANCE_FLOOR);
    let defined: Vec<bool> = (0..d).map(|i| !null_cov[(i, i)] && cov[(i, i)] >= floor).collect();
    let mut entries = DMatrix::zeros(d, d);
    let mut null = DMatrix::from_element(d, d, true);
    for i in 0..d {
        for j in i..d {
            if !(defined[i] && defined[j]) || null_cov[(i, j)] || null_cov[(j, i)] {
                continue;
            }
            let r = if i == j {
                T::one()
            } else {
                let r = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
                r.max(-T::one()).min(T::one())
            };
            entries[(i, j)] = r;
            entries[(j, i)] = r;
            null[(i, j)] = false;
            null[(j, i)] = false;
        }
    }
    CorrelationMatrix::from_parts_unchecked(entries, null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn cov_est(rows: usize, data: &[f64]) -> CovarianceEstimate<f64> {
        CovarianceEstimate::dense(DVector::zeros(rows), DMatrix::from_row_slice(rows, rows, data), "t")
    }

    #[test]
    fn ground_truth_needs_complete_data() {
        let ds = Dataset::<f64>::from_rows(&[vec![Some(1.0), Some(2.0)], vec![Some(2.0), None]]).unwrap();
        assert!(matches!(ground_truth(&ds), Err(Error::NotComplete { missing: 1 })));
        let ds = Dataset::<f64>::from_rows(&[
            vec![Some(1.0), Some(2.0)],
            vec![Some(2.0), Some(4.0)],
            vec![Some(3.0), Some(7.0)],
        ])
        .unwrap();
        let c = ground_truth(&ds).unwrap();
        // Pearson r of (1, 2, 3) and (2, 4, 7).
        let r = 5.0 / (2.0f64 * 38.0 / 3.0).sqrt();
        assert!((c.get(0, 1).unwrap() - r).abs() < 1e-12, "{:?} vs {r}", c.get(0, 1));
    }

    #[test]
    fn perfect_correlation() {
        let c = correlate_covariance(&cov_est(2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(c.entries(), &DMatrix::from_element(2, 2, 1.0));
        assert!(c.null_mask().iter().all(|&n| !n));
    }

    #[test]
    fn independence() {
        let c = correlate_covariance(&cov_est(2, &[1.0, 0.0, 0.0, 4.0]));
        assert_eq!(c.entries(), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn zero_variance_feature_is_null() {
        let c = correlate_covariance(&cov_est(3, &[1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 1.0]));
        for k in 0..3 {
            assert!(c.is_null(1, k) && c.is_null(k, 1));
        }
        assert_eq!(c.get(0, 2), Some(0.5));
        assert_eq!(c.get(0, 0), Some(1.0));
    }

    #[test]
    fn null_covariance_entry_propagates() {
        let mut est = cov_est(2, &[1.0, 0.3, 0.3, 1.0]);
        est.null_mask[(0, 1)] = true;
        est.null_mask[(1, 0)] = true;
        let c = correlate_covariance(&est);
        assert!(c.is_null(0, 1) && c.is_null(1, 0));
        assert!(!c.is_null(0, 0));
    }

    #[test]
    fn rounding_overshoot_is_clamped() {
        let c = correlate_covariance(&cov_est(2, &[1.0, 1.0 + 1e-15, 1.0 + 1e-15, 1.0]));
        assert_eq!(c.get(0, 1), Some(1.0));
    }

    #[test]
    fn complete_matrix_route() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.5]);
        let c = correlate_complete(&CompleteMatrix::new(values, "t", None));
        let r = c.get(0, 1).unwrap();
        assert!(r > 0.99 && r <= 1.0);
        assert_eq!(c.get(1, 0), Some(r));
    }
}
