//! Scoring estimated correlation matrices against the ground truth.

use std::cmp::Ordering;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::{load_csv, write_csv, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A square or rectangular matrix whose cells may be undefined (null).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix<T: Scalar> {
    pub values: DMatrix<T>,
    pub null_mask: DMatrix<bool>,
}

impl<T: Scalar> MaskedMatrix<T> {
    pub fn new(values: DMatrix<T>, null_mask: DMatrix<bool>) -> Result<Self> {
        if values.shape() != null_mask.shape() {
            return Err(shape_error(values.shape(), null_mask.shape()));
        }
        Ok(MaskedMatrix { values, null_mask })
    }

    pub fn dense(values: DMatrix<T>) -> Self {
        let null_mask = DMatrix::from_element(values.nrows(), values.ncols(), false);
        MaskedMatrix { values, null_mask }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.values.nrows() == self.values.ncols()
    }

    #[inline]
    pub fn is_null(&self, i: usize, j: usize) -> bool {
        self.null_mask[(i, j)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        (!self.null_mask[(i, j)]).then(|| self.values[(i, j)])
    }

    /// Largest absolute value over non-null cells (0 when all are null).
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .zip(self.null_mask.iter())
            .filter(|(_, &n)| !n)
            .fold(T::zero(), |m, (&v, _)| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        MaskedMatrix { values: self.values.map(f), null_mask: self.null_mask.clone() }
    }

    /// Writes the matrix as CSV; null cells are empty.
    pub fn write_csv(&self, names: &[String], path: impl AsRef<Path>) -> Result<()> {
        let ds = Dataset::new(self.values.clone(), self.null_mask.map(|n| !n), names.to_vec(), None)?;
        write_csv(&ds, path)
    }

    /// Reads a matrix written by [`MaskedMatrix::write_csv`]; returns it with its header.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<(Self, Vec<String>)> {
        let ds: Dataset<T> = load_csv(path, true)?;
        let m = MaskedMatrix { values: ds.values().clone(), null_mask: ds.observed().map(|o| !o) };
        Ok((m, ds.feature_names().to_vec()))
    }
}

/// Symmetric correlation matrix with entries in [-1, 1], unit diagonal on
/// defined cells and explicit null cells (zero variance or no joint data).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T: Scalar>(MaskedMatrix<T>);

impl<T: Scalar> CorrelationMatrix<T> {
    /// Validates the correlation-matrix invariants.
    pub fn new(entries: DMatrix<T>, null_mask: DMatrix<bool>) -> Result<Self> {
        let m = MaskedMatrix::new(entries, null_mask)?;
        if !m.is_square() {
            return Err(Error::InvalidParameter(format!(
                "correlation matrix must be square, got {}x{}",
                m.values.nrows(),
                m.values.ncols()
            )));
        }
        let d = m.dim();
        for i in 0..d {
            for j in 0..d {
                if m.null_mask[(i, j)] != m.null_mask[(j, i)] {
                    return Err(Error::InvalidParameter(format!("null mask asymmetric at ({i},{j})")));
                }
                let Some(v) = m.get(i, j) else { continue };
                if v != m.values[(j, i)] {
                    return Err(Error::InvalidParameter(format!("entries asymmetric at ({i},{j})")));
                }
                if v.abs() > T::one() || (i == j && v != T::one()) {
                    return Err(Error::InvalidParameter(format!("entry ({i},{j}) = {v} is not a correlation")));
                }
            }
        }
        Ok(CorrelationMatrix(m))
    }

    pub(crate) fn from_parts_unchecked(entries: DMatrix<T>, null_mask: DMatrix<bool>) -> Self {
        CorrelationMatrix(MaskedMatrix { values: entries, null_mask })
    }

    pub fn from_masked(m: MaskedMatrix<T>) -> Result<Self> {
        Self::new(m.values, m.null_mask)
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.0.values
    }

    pub fn null_mask(&self) -> &DMatrix<bool> {
        &self.0.null_mask
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.0.get(i, j)
    }

    pub fn is_null(&self, i: usize, j: usize) -> bool {
        self.0.is_null(i, j)
    }

    pub fn as_masked(&self) -> &MaskedMatrix<T> {
        &self.0
    }

    pub fn into_masked(self) -> MaskedMatrix<T> {
        self.0
    }

    pub fn write_csv(&self, names: &[String], path: impl AsRef<Path>) -> Result<()> {
        self.0.write_csv(names, path)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<(Self, Vec<String>)> {
        let (m, names) = MaskedMatrix::load_csv(path)?;
        Ok((Self::from_masked(m)?, names))
    }
}

fn shape_error(expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::Shape {
        expected_rows: expected.0,
        expected_cols: expected.1,
        found_rows: found.0,
        found_cols: found.1,
    }
}

fn check_same_shape<T: Scalar>(a: &MaskedMatrix<T>, b: &MaskedMatrix<T>) -> Result<()> {
    if a.values.shape() != b.values.shape() {
        return Err(shape_error(b.values.shape(), a.values.shape()));
    }
    Ok(())
}

/// Cellwise `est - truth` on jointly defined cells; null wherever either input is.
pub fn local_signed_diff<T: Scalar>(est: &MaskedMatrix<T>, truth: &MaskedMatrix<T>) -> Result<MaskedMatrix<T>> {
    check_same_shape(est, truth)?;
    let null_mask = est.null_mask.zip_map(&truth.null_mask, |a, b| a || b);
    let values = DMatrix::from_fn(est.values.nrows(), est.values.ncols(), |i, j| {
        if null_mask[(i, j)] {
            T::zero()
        } else {
            est.values[(i, j)] - truth.values[(i, j)]
        }
    });
    Ok(MaskedMatrix { values, null_mask })
}

/// Cellwise `|est - truth|`, the quantity drawn in the local RMSE difference heatmaps.
pub fn local_abs_diff<T: Scalar>(est: &MaskedMatrix<T>, truth: &MaskedMatrix<T>) -> Result<MaskedMatrix<T>> {
    Ok(local_signed_diff(est, truth)?.map(|v| v.abs()))
}

/// Root-mean-square difference over the cells defined in both matrices,
/// together with that cell count.
///
/// The whole matrix is used, so each off-diagonal pair counts twice. Multiply
/// by `sqrt(count)` to get the root-sum-square form.
pub fn rmse_with_count<T: Scalar>(est: &CorrelationMatrix<T>, truth: &CorrelationMatrix<T>) -> Result<(T, usize)> {
    let diff = local_signed_diff(est.as_masked(), truth.as_masked())?;
    let mut count = 0usize;
    let mut sum = T::zero();
    for (&v, &null) in diff.values.iter().zip(diff.null_mask.iter()) {
        if !null {
            sum += v * v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoValidCells);
    }
    Ok(((sum / T::from_usize_lossy(count)).sqrt(), count))
}

pub fn rmse_corr<T: Scalar>(est: &CorrelationMatrix<T>, truth: &CorrelationMatrix<T>) -> Result<T> {
    rmse_with_count(est, truth).map(|(r, _)| r)
}

/// Dense ranks: tied values share a rank and no rank is skipped.
///
/// Rank of `v` is one plus the number of distinct values strictly before it
/// in the requested order.
pub fn dense_rank<T: Scalar>(values: &[T], ascending: bool) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("dense_rank of an empty list".into()));
    }
    if values.iter().any(|v| v.partial_cmp(v).is_none()) {
        return Err(Error::NanInput);
    }
    let mut distinct: Vec<T> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if !ascending {
        distinct.reverse();
    }
    Ok(values
        .iter()
        .map(|v| {
            let pos = distinct.iter().position(|d| d == v).expect("value present");
            pos + 1
        })
        .collect())
}

/// One method's outcome at one missing rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult<T: Scalar> {
    pub rate: f64,
    pub correlation: CorrelationMatrix<T>,
    pub rmse: T,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult<T: Scalar> {
    pub method: String,
    pub per_rate: Vec<RateResult<T>>,
    /// Dense ascending rank of the RMSE at the highest rate; set by [`order_methods`].
    pub rank_at_max_rate: Option<usize>,
}

/// Rates closer than this are the same rate.
const RATE_EPS: f64 = 1e-12;

impl<T: Scalar> MethodResult<T> {
    pub fn new(method: impl Into<String>) -> Self {
        MethodResult { method: method.into(), per_rate: Vec::new(), rank_at_max_rate: None }
    }

    pub fn at_rate(&self, rate: f64) -> Option<&RateResult<T>> {
        self.per_rate.iter().find(|r| (r.rate - rate).abs() < RATE_EPS)
    }
}

/// Orders methods for panel layout: RMSE at `max_rate` descending, ties by
/// method name. Assigns each method its dense ascending rank (1 = lowest RMSE).
pub fn order_methods<T: Scalar>(mut results: Vec<MethodResult<T>>, max_rate: f64) -> Result<Vec<MethodResult<T>>> {
    let mut rmses = Vec::with_capacity(results.len());
    for r in &results {
        let at = r
            .at_rate(max_rate)
            .ok_or_else(|| Error::MissingRate { method: r.method.clone(), rate: max_rate })?;
        rmses.push(at.rmse);
    }
    if results.is_empty() {
        return Ok(results);
    }
    let ranks = dense_rank(&rmses, true)?;
    for (r, rank) in results.iter_mut().zip(ranks) {
        r.rank_at_max_rate = Some(rank);
    }
    let key = |r: &MethodResult<T>| r.at_rate(max_rate).expect("checked above").rmse;
    results.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.method.cmp(&b.method))
    });
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corr(d: usize, data: &[f64]) -> CorrelationMatrix<f64> {
        CorrelationMatrix::new(DMatrix::from_row_slice(d, d, data), DMatrix::from_element(d, d, false)).unwrap()
    }

    #[test]
    fn rmse_of_identical_is_zero() {
        let a = corr(2, &[1.0, 0.4, 0.4, 1.0]);
        assert_eq!(rmse_corr(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rmse_two_by_two_off_diagonal() {
        let delta = 0.3;
        let a = corr(2, &[1.0, 0.5, 0.5, 1.0]);
        let b = corr(2, &[1.0, 0.5 - delta, 0.5 - delta, 1.0]);
        let (r, count) = rmse_with_count(&a, &b).unwrap();
        assert!((r - delta / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(count, 4);
        // Root-sum-square form differs by sqrt(|V|).
        assert!((r * (count as f64).sqrt() - (2.0 * delta * delta).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rmse_excludes_null_cells() {
        let truth = corr(3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0]);
        let mut null = DMatrix::from_element(3, 3, false);
        for k in 0..3 {
            null[(2, k)] = true;
            null[(k, 2)] = true;
        }
        let est = CorrelationMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            null,
        )
        .unwrap();
        let (r, count) = rmse_with_count(&est, &truth).unwrap();
        assert_eq!(count, 4);
        assert!((r - (0.08f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rmse_without_valid_cells() {
        let all_null = CorrelationMatrix::new(DMatrix::<f64>::zeros(2, 2), DMatrix::from_element(2, 2, true)).unwrap();
        assert!(matches!(rmse_corr(&all_null, &all_null), Err(Error::NoValidCells)));
    }

    #[test]
    fn rmse_shape_mismatch() {
        assert!(matches!(rmse_corr(&corr(1, &[1.0]), &corr(2, &[1.0, 0.0, 0.0, 1.0])), Err(Error::Shape { .. })));
    }

    #[test]
    fn validation_rejects_non_correlations() {
        let n = DMatrix::from_element(2, 2, false);
        assert!(CorrelationMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]), n.clone()).is_err());
        assert!(CorrelationMatrix::new(DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 1.0]), n.clone()).is_err());
        assert!(CorrelationMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.2, 1.2, 1.0]), n).is_err());
    }

    #[test]
    fn local_diffs() {
        let truth = corr(2, &[1.0, 0.9, 0.9, 1.0]);
        let est = corr(2, &[1.0, 0.2, 0.2, 1.0]);
        let signed = local_signed_diff(est.as_masked(), truth.as_masked()).unwrap();
        assert!((signed.values[(0, 1)] + 0.7).abs() < 1e-15);
        assert_eq!(signed.values[(0, 1)], signed.values[(1, 0)]);
        let abs = local_abs_diff(est.as_masked(), truth.as_masked()).unwrap();
        assert!((abs.values[(1, 0)] - 0.7).abs() < 1e-15);
        let zero = local_abs_diff(truth.as_masked(), truth.as_masked()).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diff_null_is_union() {
        let a = MaskedMatrix::new(DMatrix::<f64>::zeros(2, 2), DMatrix::from_row_slice(2, 2, &[true, false, false, false])).unwrap();
        let b = MaskedMatrix::new(DMatrix::<f64>::zeros(2, 2), DMatrix::from_row_slice(2, 2, &[false, false, false, true])).unwrap();
        let d = local_abs_diff(&a, &b).unwrap();
        assert_eq!(d.null_mask, DMatrix::from_row_slice(2, 2, &[true, false, false, true]));
    }

    #[test]
    fn dense_rank_example() {
        let v = [89.0, 72.0, 72.0, 65.0, 94.0, 89.0, 72.0];
        let ranks = dense_rank(&v, true).unwrap();
        assert_eq!(ranks, vec![3, 2, 2, 1, 4, 3, 2]);
        let mut multiset = ranks.clone();
        multiset.sort_unstable();
        assert_eq!(multiset, vec![1, 2, 2, 2, 3, 3, 4]);
        assert_eq!(dense_rank(&v, false).unwrap(), vec![2, 3, 3, 4, 1, 2, 3]);
    }

    #[test]
    fn dense_rank_edge_cases() {
        assert_eq!(dense_rank(&[0.5, 0.5, 0.5], true).unwrap(), vec![1, 1, 1]);
        assert!(matches!(dense_rank(&[1.0, f64::NAN], true), Err(Error::NanInput)));
        assert!(dense_rank::<f64>(&[], true).is_err());
    }

    fn result(name: &str, rmse: f64) -> MethodResult<f64> {
        MethodResult {
            method: name.into(),
            per_rate: vec![RateResult { rate: 0.5, correlation: corr(1, &[1.0]), rmse, wall_time: 0.0 }],
            rank_at_max_rate: None,
        }
    }

    fn names(v: &[MethodResult<f64>]) -> Vec<&str> {
        v.iter().map(|r| r.method.as_str()).collect()
    }

    #[test]
    fn order_descending_with_name_ties() {
        let out = order_methods(vec![result("A", 0.3), result("B", 0.1), result("C", 0.3)], 0.5).unwrap();
        assert_eq!(names(&out), vec!["A", "C", "B"]);
        let ranks: Vec<_> = out.iter().map(|r| r.rank_at_max_rate.unwrap()).collect();
        assert_eq!(ranks, vec![2, 2, 1]);
    }

    #[test]
    fn order_single_and_missing_rate() {
        let out = order_methods(vec![result("only", 0.2)], 0.5).unwrap();
        assert_eq!(out[0].rank_at_max_rate, Some(1));
        match order_methods(vec![result("X", 0.2)], 0.4) {
            Err(Error::MissingRate { method, .. }) => assert_eq!(method, "X"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn corr_strategy(d: usize) -> impl Strategy<Value = CorrelationMatrix<f64>> {
        (proptest::collection::vec(-1.0f64..1.0, d * d), proptest::collection::vec(any::<bool>(), d)).prop_map(move |(v, nulls)| {
            let values = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { v[i.min(j) * d + i.max(j)] });
            let null = DMatrix::from_fn(d, d, |i, j| nulls[i] || nulls[j]);
            CorrelationMatrix::new(values, null).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rmse_properties(a in corr_strategy(4), b in corr_strategy(4)) {
            if let Ok(ab) = rmse_corr(&a, &b) {
                prop_assert_eq!(rmse_corr(&b, &a).unwrap(), ab);
                let diff = local_signed_diff(a.as_masked(), b.as_masked()).unwrap();
                let abs = local_abs_diff(a.as_masked(), b.as_masked()).unwrap();
                let cells: Vec<f64> = diff.values.iter().zip(diff.null_mask.iter()).filter(|(_, &n)| !n).map(|(&v, _)| v).collect();
                let from_map = (cells.iter().map(|v| v * v).sum::<f64>() / cells.len() as f64).sqrt();
                prop_assert!((from_map - ab).abs() < 1e-12);
                for (s, a) in diff.values.iter().zip(abs.values.iter()) {
                    prop_assert_eq!(s.abs(), *a);
                }
            }
            if let Ok(aa) = rmse_corr(&a, &a) {
                prop_assert_eq!(aa, 0.0);
            }
        }

        #[test]
        fn dense_rank_has_no_gaps(v in proptest::collection::vec(0u8..10, 1..30), asc in any::<bool>()) {
            let vals: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let ranks = dense_rank(&vals, asc).unwrap();
            let max = *ranks.iter().max().unwrap();
            for k in 1..=max {
                prop_assert!(ranks.contains(&k));
            }
        }

        #[test]
        fn order_is_permutation_invariant(rmses in proptest::collection::vec(0u8..4, 1..8), seed in any::<u64>()) {
            let base: Vec<MethodResult<f64>> = rmses.iter().enumerate().map(|(i, &r)| result(&format!("m{i}"), r as f64 / 10.0)).collect();
            let mut shuffled = base.clone();
            let len = shuffled.len();
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = order_methods(base, 0.5).unwrap();
            let b = order_methods(shuffled, 0.5).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
