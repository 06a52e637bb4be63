//! K-nearest-neighbour imputation with the NaN-aware Euclidean distance.

use std::cmp::Ordering;

use super::CompleteMatrix;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NAME: &str = "KNNI";

pub fn default_k() -> usize {
    5
}

/// Distance over the coordinates observed in both rows, scaled up by
/// `d / |shared|`; `None` when the rows share no coordinate.
pub fn nan_euclidean<T: Scalar>(ds: &Dataset<T>, a: usize, b: usize) -> Option<T> {
    let d = ds.n_features();
    let mut shared = 0usize;
    let mut ss = T::zero();
    for j in 0..d {
        if let (Some(x), Some(y)) = (ds.get(a, j), ds.get(b, j)) {
            let diff = x - y;
            ss += diff * diff;
            shared += 1;
        }
    }
    (shared > 0).then(|| (T::from_usize_lossy(d) / T::from_usize_lossy(shared) * ss).sqrt())
}

/// Each missing cell becomes the unweighted mean of that feature over the `k`
/// nearest rows observing it. Fewer eligible donors than `k` uses all of them;
/// none falls back to the feature mean. Donor values are always original
/// observations, never earlier fills.
pub fn impute_knn<T: Scalar>(ds: &Dataset<T>, k: usize) -> Result<CompleteMatrix<T>> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (n, d) = (ds.n_samples(), ds.n_features());
    let means: Vec<Option<T>> = (0..d).map(|j| ds.observed_moments(j).map(|(m, _)| m)).collect();
    let mut values = ds.values().clone();

    let mut neighbours: Vec<(T, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        if (0..d).all(|j| ds.is_observed(i, j)) {
            continue;
        }
        neighbours.clear();
        neighbours.extend((0..n).filter(|&r| r != i).filter_map(|r| nan_euclidean(ds, i, r).map(|dist| (dist, r))));
        neighbours.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        for j in (0..d).filter(|&j| !ds.is_observed(i, j)) {
            let mut sum = T::zero();
            let mut used = 0usize;
            for &(_, r) in &neighbours {
                if let Some(v) = ds.get(r, j) {
                    sum += v;
                    used += 1;
                    if used == k {
                        break;
                    }
                }
            }
            values[(i, j)] = if used > 0 {
                sum / T::from_usize_lossy(used)
            } else {
                means[j].ok_or_else(|| Error::TooFewObserved {
                    feature: j,
                    name: ds.feature_names()[j].clone(),
                    observed: 0,
                    required: 1,
                })?
            };
        }
    }
    Ok(CompleteMatrix::new(values, NAME, None))
}
