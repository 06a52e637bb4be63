//! Ingestion of imputations produced by tools outside this crate.

use std::path::Path;

use super::CompleteMatrix;
use crate::dataset::{load_csv, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Loads an imputed CSV of the same shape as `ds`, restoring every observed
/// cell of `ds` so the result obeys the pass-through rule.
pub fn import_external_imputed<T: Scalar>(
    path: impl AsRef<Path>,
    has_header: bool,
    ds: &Dataset<T>,
    method: &str,
) -> Result<CompleteMatrix<T>> {
    let file: Dataset<T> = load_csv(path, has_header)?;
    from_dataset(file, ds, method)
}

pub(crate) fn from_dataset<T: Scalar>(file: Dataset<T>, ds: &Dataset<T>, method: &str) -> Result<CompleteMatrix<T>> {
    let expected = (ds.n_samples(), ds.n_features());
    let found = (file.n_samples(), file.n_features());
    if expected != found {
        return Err(Error::Shape {
            expected_rows: expected.0,
            expected_cols: expected.1,
            found_rows: found.0,
            found_cols: found.1,
        });
    }
    let missing = file.missing_count();
    if missing > 0 {
        return Err(Error::ExternalMissing { missing });
    }
    let mut values = file.values().clone();
    CompleteMatrix::restore_observed(&mut values, ds);
    Ok(CompleteMatrix::new(values, method, None))
}
