//! Iterative PCA imputation: alternate a truncated-SVD reconstruction of the
//! centred data with refilling the missing cells.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use super::mean::mean_filled;
use super::{CompleteMatrix, Convergence};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NAME: &str = "ImputePCA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    /// Defaults to `min(d - 1, 5)`, at least 1 and at most `n - 1`.
    pub n_components: Option<usize>,
    pub max_iter: usize,
    /// Largest absolute change of a filled cell that ends iteration.
    pub tol: f64,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig { n_components: None, max_iter: 200, tol: 1e-6 }
    }
}

impl PcaConfig {
    pub fn components_for(&self, n: usize, d: usize) -> usize {
        self.n_components
            .unwrap_or_else(|| d.saturating_sub(1).clamp(1, 5).min(n.saturating_sub(1)))
    }
}

/// Rank-`k` reconstruction of `x` around its column means.
pub(crate) fn low_rank_reconstruction<T: Scalar>(x: &DMatrix<T>, k: usize) -> Result<DMatrix<T>> {
    let (n, d) = x.shape();
    let nf = T::from_usize_lossy(n);
    let means: Vec<T> = (0..d).map(|j| x.column(j).iter().fold(T::zero(), |s, &v| s + v) / nf).collect();
    let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
    let dec = SVD::try_new(centred, true, true, T::default_epsilon(), 0).ok_or(Error::Svd)?;
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].partial_cmp(&dec.singular_values[a]).unwrap().then(a.cmp(&b)));
    let u = dec.u.as_ref().expect("u requested");
    let v_t = dec.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::from_fn(n, d, |_, j| means[j]);
    for &c in order.iter().take(k) {
        out += u.column(c) * v_t.row(c) * dec.singular_values[c];
    }
    Ok(out)
}

pub fn impute_pca<T: Scalar>(ds: &Dataset<T>, cfg: &PcaConfig) -> Result<CompleteMatrix<T>> {
    let (n, d) = (ds.n_samples(), ds.n_features());
    let k = cfg.components_for(n, d);
    if k < 1 || k > d.min(n.saturating_sub(1)) {
        return Err(Error::InvalidParameter(format!(
            "n_components {k} outside [1, {}]",
            d.min(n.saturating_sub(1))
        )));
    }
    let mut x = mean_filled(ds)?;
    let tol = T::lit(cfg.tol);
    let mut convergence = Convergence { iterations: 0, converged: false };
    if ds.is_complete() {
        convergence.converged = true;
        return Ok(CompleteMatrix::new(x, NAME, Some(convergence)));
    }
    for it in 1..=cfg.max_iter {
        let recon = low_rank_reconstruction(&x, k)?;
        let mut max_change = T::zero();
        for j in 0..d {
            for i in 0..n {
                if !ds.is_observed(i, j) {
                    max_change = max_change.max((recon[(i, j)] - x[(i, j)]).abs());
                    x[(i, j)] = recon[(i, j)];
                }
            }
        }
        convergence.iterations = it;
        if max_change < tol {
            convergence.converged = true;
            break;
        }
    }
    Ok(CompleteMatrix::new(x, NAME, Some(convergence)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::test_support::{assert_pass_through, gaussian_mcar};

    #[test]
    fn rank_one_exact_recovery() {
        // Outer product of (1, 2, 3, 4) and (1, -2, 3); the cell at (2, 1) is -6.
        let u = [1.0, 2.0, 3.0, 4.0];
        let v = [1.0, -2.0, 3.0];
        let mut rows: Vec<Vec<Option<f64>>> = u.iter().map(|a| v.iter().map(|b| Some(a * b)).collect()).collect();
        rows[2][1] = None;
        let ds = Dataset::<f64>::from_rows(&rows).unwrap();
        let cfg = PcaConfig { n_components: Some(1), max_iter: 5000, tol: 1e-12 };
        let out = impute_pca(&ds, &cfg).unwrap();
        assert!((out.values[(2, 1)] + 6.0).abs() < 1e-6, "{}", out.values[(2, 1)]);
    }

    #[test]
    fn complete_input_unchanged() {
        let ds = Dataset::<f64>::complete(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, 4.0, 4.0])).unwrap();
        let out = impute_pca(&ds, &PcaConfig::default()).unwrap();
        assert_eq!(&out.values, ds.values());
    }

    #[test]
    fn full_rank_is_a_fixed_point() {
        let (_, ds) = gaussian_mcar(12, 3, 0.25, 7);
        let cfg = PcaConfig { n_components: Some(3), max_iter: 200, tol: 1e-10 };
        let out = impute_pca(&ds, &cfg).unwrap();
        let conv = out.convergence.unwrap();
        assert!(conv.converged);
        let again = low_rank_reconstruction(&out.values, 3).unwrap();
        for i in 0..12 {
            for j in 0..3 {
                if !ds.is_observed(i, j) {
                    assert!((again[(i, j)] - out.values[(i, j)]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn component_range_checked() {
        let ds = Dataset::complete(DMatrix::<f64>::identity(3, 3)).unwrap();
        assert!(impute_pca(&ds, &PcaConfig { n_components: Some(0), ..Default::default() }).is_err());
        assert!(impute_pca(&ds, &PcaConfig { n_components: Some(3), ..Default::default() }).is_err());
        assert!(impute_pca(&ds, &PcaConfig { n_components: Some(2), ..Default::default() }).is_ok());
    }

    #[test]
    fn default_components() {
        let cfg = PcaConfig::default();
        assert_eq!(cfg.components_for(150, 4), 3);
        assert_eq!(cfg.components_for(1797, 64), 5);
        assert_eq!(cfg.components_for(10, 1), 1);
    }

    #[test]
    fn observed_cells_pass_through() {
        let (_, ds) = gaussian_mcar(40, 6, 0.3, 2);
        assert_pass_through(&ds, &impute_pca(&ds, &PcaConfig::default()).unwrap().values);
    }
}
