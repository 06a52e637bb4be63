//! Matrix completion by iterated singular-value soft-thresholding.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use super::mean::mean_filled;
use super::{CompleteMatrix, Convergence};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NAME: &str = "SoftImpute";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoftImputeConfig {
    /// Shrinkage as a fraction of the largest singular value of the mean-filled matrix.
    pub lambda_frac: f64,
    pub max_iter: usize,
    /// Relative Frobenius change between iterates that ends iteration.
    pub tol: f64,
    /// Keep at most this many singular values per step. `None` is the plain
    /// convex iteration; a cap makes it a rank-constrained (hard-impute style)
    /// iteration whose objective is no longer guaranteed to decrease.
    pub max_rank: Option<usize>,
}

impl Default for SoftImputeConfig {
    fn default() -> Self {
        SoftImputeConfig { lambda_frac: 0.1, max_iter: 100, tol: 1e-5, max_rank: None }
    }
}

#[derive(Debug, Clone)]
pub struct SoftImputeOutput<T: Scalar> {
    pub completed: CompleteMatrix<T>,
    pub lambda: T,
    /// `0.5 * ||P_obs(X - Z)||_F^2 + lambda * ||Z||_*` for the mean-filled
    /// start and every iterate after it.
    pub objective: Vec<T>,
}

fn svd<T: Scalar>(m: DMatrix<T>) -> Result<SVD<T, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m, true, true, T::default_epsilon(), 0).ok_or(Error::Svd)
}

fn observed_residual<T: Scalar>(ds: &Dataset<T>, z: &DMatrix<T>) -> T {
    let mut s = T::zero();
    for j in 0..ds.n_features() {
        for i in 0..ds.n_samples() {
            if let Some(v) = ds.get(i, j) {
                let r = v - z[(i, j)];
                s += r * r;
            }
        }
    }
    s * T::lit(0.5)
}

pub fn impute_softimpute<T: Scalar>(ds: &Dataset<T>, cfg: &SoftImputeConfig) -> Result<SoftImputeOutput<T>> {
    if !(0.0..1.0).contains(&cfg.lambda_frac) {
        return Err(Error::InvalidParameter(format!("lambda_frac {} outside [0, 1)", cfg.lambda_frac)));
    }
    if cfg.max_rank == Some(0) {
        return Err(Error::InvalidParameter("max_rank must be positive".into()));
    }
    let mut z = mean_filled(ds)?;
    let start = svd(z.clone())?;
    let sigma_max = start.singular_values.iter().fold(T::zero(), |m, &s| m.max(s));
    let lambda = T::lit(cfg.lambda_frac) * sigma_max;
    let nuclear = start.singular_values.iter().fold(T::zero(), |a, &s| a + s);
    let mut objective = vec![observed_residual(ds, &z) + lambda * nuclear];

    let tol = T::lit(cfg.tol);
    let tiny = T::lit(T::epsilon_f64());
    let mut convergence = Convergence { iterations: 0, converged: false };
    for it in 1..=cfg.max_iter {
        let mut w = z.clone();
        CompleteMatrix::restore_observed(&mut w, ds);
        let dec = svd(w)?;
        let mut shrunk: Vec<(usize, T)> = dec
            .singular_values
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, (s - lambda).max(T::zero())))
            .filter(|&(_, s)| s > T::zero())
            .collect();
        if let Some(r) = cfg.max_rank {
            shrunk.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            shrunk.truncate(r);
        }
        let u = dec.u.as_ref().expect("u requested");
        let v_t = dec.v_t.as_ref().expect("v_t requested");
        let mut next = DMatrix::zeros(z.nrows(), z.ncols());
        let mut nuclear = T::zero();
        for &(k, s) in &shrunk {
            next += u.column(k) * v_t.row(k) * s;
            nuclear += s;
        }
        let change = (&next - &z).norm() / z.norm().max(tiny);
        z = next;
        objective.push(observed_residual(ds, &z) + lambda * nuclear);
        convergence.iterations = it;
        if change < tol {
            convergence.converged = true;
            break;
        }
    }
    CompleteMatrix::restore_observed(&mut z, ds);
    Ok(SoftImputeOutput { completed: CompleteMatrix::new(z, NAME, Some(convergence)), lambda, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::test_support::{assert_pass_through, gaussian_mcar};

    #[test]
    fn rank_one_exact_completion() {
        let ds = Dataset::<f64>::from_rows(&[vec![Some(1.0), Some(2.0)], vec![Some(2.0), None]]).unwrap();
        let cfg = SoftImputeConfig { lambda_frac: 0.0, max_iter: 10_000, tol: 1e-15, max_rank: Some(1) };
        let out = impute_softimpute(&ds, &cfg).unwrap();
        assert!((out.completed.values[(1, 1)] - 4.0).abs() < 1e-6, "{}", out.completed.values[(1, 1)]);
    }

    #[test]
    fn uncapped_zero_lambda_is_stationary() {
        let ds = Dataset::<f64>::from_rows(&[vec![Some(1.0), Some(2.0)], vec![Some(2.0), None]]).unwrap();
        let cfg = SoftImputeConfig { lambda_frac: 0.0, ..SoftImputeConfig::default() };
        let out = impute_softimpute(&ds, &cfg).unwrap();
        assert!((out.completed.values[(1, 1)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complete_input_unchanged() {
        let ds = Dataset::<f64>::complete(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, 4.0, 4.0])).unwrap();
        let out = impute_softimpute(&ds, &SoftImputeConfig::default()).unwrap();
        assert_eq!(&out.completed.values, ds.values());
    }

    #[test]
    fn objective_nonincreasing() {
        for seed in 0..10 {
            let (_, ds) = gaussian_mcar(100, 5, 0.3, seed);
            let out = impute_softimpute(&ds, &SoftImputeConfig::default()).unwrap();
            for w in out.objective.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn lambda_is_fraction_of_top_singular_value() {
        let ds = Dataset::<f64>::complete(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
        let out = impute_softimpute(&ds, &SoftImputeConfig { lambda_frac: 0.5, ..Default::default() }).unwrap();
        assert!((out.lambda - 1.5).abs() < 1e-12);
    }

    #[test]
    fn parameter_checks() {
        let ds = Dataset::complete(DMatrix::<f64>::identity(2, 2)).unwrap();
        assert!(impute_softimpute(&ds, &SoftImputeConfig { lambda_frac: 1.0, ..Default::default() }).is_err());
        assert!(impute_softimpute(&ds, &SoftImputeConfig { max_rank: Some(0), ..Default::default() }).is_err());
    }

    #[test]
    fn observed_cells_pass_through() {
        let (_, ds) = gaussian_mcar(40, 6, 0.3, 2);
        let out = impute_softimpute(&ds, &SoftImputeConfig::default()).unwrap();
        assert_pass_through(&ds, &out.completed.values);
    }
}
