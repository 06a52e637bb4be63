//! Tabular numeric data with an explicit observedness mask.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An `n x d` matrix of reals together with a mask of which cells are present.
///
/// The numeric payload of a cell whose mask entry is `false` is unspecified and
/// never read by any computation in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    values: DMatrix<T>,
    observed: DMatrix<bool>,
    feature_names: Vec<String>,
    image_shape: Option<(usize, usize)>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        values: DMatrix<T>,
        observed: DMatrix<bool>,
        feature_names: Vec<String>,
        image_shape: Option<(usize, usize)>,
    ) -> Result<Self> {
        if values.shape() != observed.shape() {
            return Err(Error::Shape {
                expected_rows: values.nrows(),
                expected_cols: values.ncols(),
                found_rows: observed.nrows(),
                found_cols: observed.ncols(),
            });
        }
        if values.nrows() == 0 {
            return Err(Error::Empty("rows"));
        }
        if values.ncols() == 0 {
            return Err(Error::Empty("columns"));
        }
        if feature_names.len() != values.ncols() {
            return Err(Error::InvalidParameter(format!(
                "{} feature names for {} features",
                feature_names.len(),
                values.ncols()
            )));
        }
        let ds = Dataset { values, observed, feature_names, image_shape: None };
        match image_shape {
            Some((h, w)) => ds.with_image_shape(h, w),
            None => Ok(ds),
        }
    }

    /// A fully observed dataset with generated feature names.
    pub fn complete(values: DMatrix<T>) -> Result<Self> {
        let observed = DMatrix::from_element(values.nrows(), values.ncols(), true);
        let names = default_names(values.ncols());
        Self::new(values, observed, names, None)
    }

    /// Builds a dataset from row slices, `None` marking a missing cell.
    pub fn from_rows(rows: &[Vec<Option<T>>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Ragged { row: i, expected: d, found: r.len() });
            }
        }
        let values = DMatrix::from_fn(n, d, |i, j| rows[i][j].unwrap_or_else(T::zero));
        let observed = DMatrix::from_fn(n, d, |i, j| rows[i][j].is_some());
        Self::new(values, observed, default_names(d), None)
    }

    pub fn with_image_shape(mut self, height: usize, width: usize) -> Result<Self> {
        if height * width != self.n_features() {
            return Err(Error::ImageShape { height, width, features: self.n_features() });
        }
        self.image_shape = Some((height, width));
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::InvalidParameter(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = names;
        Ok(self)
    }

    /// Same values and metadata with a different mask.
    pub fn with_mask(&self, observed: DMatrix<bool>) -> Result<Self> {
        Self::new(self.values.clone(), observed, self.feature_names.clone(), self.image_shape)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn observed(&self) -> &DMatrix<bool> {
        &self.observed
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[(row, col)]
    }

    /// The value of an observed cell, `None` when missing.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.observed[(row, col)].then(|| self.values[(row, col)])
    }

    pub fn missing_count(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }

    pub fn is_complete(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    pub fn observed_in_column(&self, col: usize) -> usize {
        self.observed.column(col).iter().filter(|&&o| o).count()
    }

    /// Observed values of one feature, in row order.
    pub fn column_observed(&self, col: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.n_samples()).filter(move |&i| self.observed[(i, col)]).map(move |i| self.values[(i, col)])
    }

    /// Errors unless every feature has at least `required` observed cells.
    pub fn require_observed(&self, required: usize) -> Result<()> {
        for j in 0..self.n_features() {
            let observed = self.observed_in_column(j);
            if observed < required {
                return Err(Error::TooFewObserved {
                    feature: j,
                    name: self.feature_names[j].clone(),
                    observed,
                    required,
                });
            }
        }
        Ok(())
    }

    /// Per-feature ML mean and variance over observed cells.
    pub(crate) fn observed_moments(&self, col: usize) -> Option<(T, T)> {
        let mut count = 0usize;
        let mut sum = T::zero();
        for v in self.column_observed(col) {
            sum += v;
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let n = T::from_usize_lossy(count);
        let mean = sum / n;
        let mut ss = T::zero();
        for v in self.column_observed(col) {
            let c = v - mean;
            ss += c * c;
        }
        Some((mean, ss / n))
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("nan")
}

/// Loads a numeric CSV. Empty cells and `NaN` (any case) are missing.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, has_header)
}

pub fn read_csv<T: Scalar, R: Read>(reader: R, has_header: bool) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if has_header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut cells: Vec<Option<T>> = Vec::new();
    let mut n = 0usize;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Ragged { row, expected, found: record.len() });
        }
        for (col, field) in record.iter().enumerate() {
            if is_missing_token(field) {
                cells.push(None);
                continue;
            }
            let parsed = field
                .parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { row, col, token: field.to_owned() })?;
            cells.push(Some(parsed));
        }
        n += 1;
    }
    let d = width.unwrap_or(0);
    if n == 0 {
        return Err(Error::Empty("rows"));
    }
    if d == 0 {
        return Err(Error::Empty("columns"));
    }
    let values = DMatrix::from_fn(n, d, |i, j| cells[i * d + j].unwrap_or_else(T::zero));
    let observed = DMatrix::from_fn(n, d, |i, j| cells[i * d + j].is_some());
    let names = header.unwrap_or_else(|| default_names(d));
    Dataset::new(values, observed, names, None)
}

/// Writes a dataset as CSV with a header row; missing cells are left empty.
///
/// Values use the shortest representation that parses back to the same
/// float, so `write_csv` followed by `load_csv` is lossless.
pub fn write_csv<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(ds, file)
}

pub fn write_csv_to<T: Scalar, W: Write>(ds: &Dataset<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ds.feature_names())?;
    let mut record = Vec::with_capacity(ds.n_features());
    for i in 0..ds.n_samples() {
        record.clear();
        for j in 0..ds.n_features() {
            record.push(ds.get(i, j).map(|v| v.to_string()).unwrap_or_default());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Observed cells of each feature mapped affinely onto [0, 1].
    #[default]
    #[serde(rename = "minmax01")]
    MinMax01,
    /// Zero mean, unit ML variance.
    #[serde(rename = "zscore")]
    ZScore,
    None,
}

/// A fitted per-feature affine transform `x -> (x - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationSpec<T: Scalar> {
    pub mode: NormalizationMode,
    /// `(min, max)` for MinMax01, `(mean, std)` for ZScore, `(0, 1)` for None.
    pub per_feature_params: Vec<(T, T)>,
}

impl<T: Scalar> NormalizationSpec<T> {
    /// Fits the transform from the observed cells of `ds`.
    pub fn fit(ds: &Dataset<T>, mode: NormalizationMode) -> Result<Self> {
        let mut params = Vec::with_capacity(ds.n_features());
        for j in 0..ds.n_features() {
            if ds.observed_in_column(j) == 0 {
                return Err(Error::TooFewObserved {
                    feature: j,
                    name: ds.feature_names()[j].clone(),
                    observed: 0,
                    required: 1,
                });
            }
            let p = match mode {
                NormalizationMode::MinMax01 => {
                    let mut lo = T::max_value().unwrap();
                    let mut hi = T::min_value().unwrap();
                    for v in ds.column_observed(j) {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    (lo, hi)
                }
                NormalizationMode::ZScore => {
                    let (mean, var) = ds.observed_moments(j).expect("nonempty column");
                    (mean, var.sqrt())
                }
                NormalizationMode::None => (T::zero(), T::one()),
            };
            params.push(p);
        }
        Ok(NormalizationSpec { mode, per_feature_params: params })
    }

    fn shift_scale(&self, j: usize) -> (T, T) {
        let (a, b) = self.per_feature_params[j];
        match self.mode {
            NormalizationMode::MinMax01 => (a, b - a),
            NormalizationMode::ZScore => (a, b),
            NormalizationMode::None => (T::zero(), T::one()),
        }
    }

    /// Applies the fitted transform. Constant features (zero range or zero
    /// deviation) are shifted only, so MinMax01 maps them to 0.
    pub fn apply(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        if self.per_feature_params.len() != ds.n_features() {
            return Err(Error::Shape {
                expected_rows: ds.n_samples(),
                expected_cols: self.per_feature_params.len(),
                found_rows: ds.n_samples(),
                found_cols: ds.n_features(),
            });
        }
        let mut values = ds.values().clone();
        for j in 0..ds.n_features() {
            let (shift, scale) = self.shift_scale(j);
            for i in 0..ds.n_samples() {
                if !ds.is_observed(i, j) {
                    continue;
                }
                let centred = values[(i, j)] - shift;
                values[(i, j)] = if scale > T::zero() { centred / scale } else { centred };
            }
        }
        Dataset::new(values, ds.observed().clone(), ds.feature_names().to_vec(), ds.image_shape())
    }

    /// Maps normalized values back to the original units.
    pub fn inverse(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        let mut values = ds.values().clone();
        for j in 0..ds.n_features() {
            let (shift, scale) = self.shift_scale(j);
            let scale = if scale > T::zero() { scale } else { T::one() };
            for i in 0..ds.n_samples() {
                if ds.is_observed(i, j) {
                    values[(i, j)] = values[(i, j)] * scale + shift;
                }
            }
        }
        Dataset::new(values, ds.observed().clone(), ds.feature_names().to_vec(), ds.image_shape())
    }
}

/// Fits a normalization on the observed cells and applies it.
pub fn normalize<T: Scalar>(
    ds: &Dataset<T>,
    mode: NormalizationMode,
) -> Result<(Dataset<T>, NormalizationSpec<T>)> {
    let spec = NormalizationSpec::fit(ds, mode)?;
    Ok((spec.apply(ds)?, spec))
}

/// Mean and ML (divide-by-n) covariance of a fully observed dataset.
pub fn complete_moments<T: Scalar>(ds: &Dataset<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let missing = ds.missing_count();
    if missing > 0 {
        return Err(Error::NotComplete { missing });
    }
    Ok(ml_moments(ds.values()))
}

/// Column means and ML covariance, one pair at a time.
///
/// Each entry depends only on its two columns, so deleting or permuting other
/// features leaves it bit-identical.
pub(crate) fn ml_moments<T: Scalar>(x: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let (n, d) = x.shape();
    let nf = T::from_usize_lossy(n);
    let mean = DVector::from_fn(d, |j, _| x.column(j).iter().fold(T::zero(), |a, &v| a + v) / nf);
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut s = T::zero();
            for i in 0..n {
                s += (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]);
            }
            let c = s / nf;
            cov[(a, b)] = c;
            cov[(b, a)] = c;
        }
    }
    (mean, cov)
}
