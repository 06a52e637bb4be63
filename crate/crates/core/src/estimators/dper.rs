//! Direct pairwise maximum-likelihood covariance estimation.
//!
//! Means and variances come from each feature's observed cells. Every
//! off-diagonal entry maximizes the bivariate normal likelihood of the rows
//! where both features are observed, with the two variances held at their
//! marginal estimates. Setting the derivative to zero gives a cubic in the
//! covariance whose feasible real roots are the candidates.

use nalgebra::{DMatrix, DVector};

use super::cubic::solve_cubic;
use super::{CovarianceEstimate, VARIANCE_FLOOR};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::scalar::Scalar;

pub const NAME: &str = "DPER";

/// Sufficient statistics of one feature pair over its jointly observed rows,
/// centred at the marginal means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats<T: Scalar> {
    pub m: usize,
    pub s11: T,
    pub s22: T,
    pub s12: T,
    pub var1: T,
    pub var2: T,
}

impl<T: Scalar> PairStats<T> {
    /// Restricted log-likelihood as a function of the covariance, up to a constant.
    pub fn log_likelihood(&self, sigma: T) -> T {
        let m = T::from_usize_lossy(self.m);
        let det = self.var1 * self.var2 - sigma * sigma;
        let quad = self.s11 * self.var2 - T::lit(2.0) * self.s12 * sigma + self.s22 * self.var1;
        -(m / T::lit(2.0)) * det.ln() - quad / (T::lit(2.0) * det)
    }

    /// Coefficients `[a, b, c, e]` of the stationarity cubic `a s^3 + b s^2 + c s + e`.
    pub fn cubic(&self) -> [T; 4] {
        let m = T::from_usize_lossy(self.m);
        let (v1, v2) = (self.var1, self.var2);
        [m, -self.s12, self.s11 * v2 + self.s22 * v1 - m * v1 * v2, -self.s12 * v1 * v2]
    }

    /// Open interval of covariances keeping the 2x2 matrix positive definite.
    pub fn bound(&self) -> T {
        (self.var1 * self.var2).sqrt()
    }

    /// The maximizing feasible root; ties go to the smaller magnitude.
    pub fn solve(&self) -> Result<T> {
        let [a, b, c, e] = self.cubic();
        let bound = self.bound();
        let feasible: Vec<T> = solve_cubic(a, b, c, e)?
            .into_iter()
            .filter(|s| s.abs() < bound)
            .collect();
        let best = feasible.into_iter().map(|s| (s, self.log_likelihood(s))).fold(
            None::<(T, T)>,
            |best, (s, l)| match best {
                None => Some((s, l)),
                Some((bs, bl)) if l > bl || (l == bl && s.abs() < bs.abs()) => Some((s, l)),
                keep => keep,
            },
        );
        Ok(match best {
            Some((s, _)) => s,
            None => self.grid_fallback(),
        })
    }

    /// Coarse-to-fine scan for the rare case where rounding pushes every
    /// root to the boundary.
    fn grid_fallback(&self) -> T {
        let bound = self.bound();
        let (mut lo, mut hi) = (-bound, bound);
        let mut best = T::zero();
        for _ in 0..6 {
            let steps = 200usize;
            let h = (hi - lo) / T::from_usize_lossy(steps);
            let mut best_l = -T::max_value().unwrap();
            for k in 1..steps {
                let s = lo + h * T::from_usize_lossy(k);
                let l = self.log_likelihood(s);
                if l > best_l {
                    best_l = l;
                    best = s;
                }
            }
            lo = (best - h).max(-bound);
            hi = (best + h).min(bound);
        }
        best
    }
}

/// Statistics for features `i` and `j`; `None` if they share no observed row.
pub fn pair_stats<T: Scalar>(ds: &Dataset<T>, i: usize, j: usize, mean: &DVector<T>, var: &DVector<T>) -> Option<PairStats<T>> {
    let mut m = 0usize;
    let (mut s11, mut s22, mut s12) = (T::zero(), T::zero(), T::zero());
    for r in 0..ds.n_samples() {
        if let (Some(x), Some(y)) = (ds.get(r, i), ds.get(r, j)) {
            let (cx, cy) = (x - mean[i], y - mean[j]);
            s11 += cx * cx;
            s22 += cy * cy;
            s12 += cx * cy;
            m += 1;
        }
    }
    (m > 0).then_some(PairStats { m, s11, s22, s12, var1: var[i], var2: var[j] })
}

/// Pairwise ML covariance. Entries whose pair has no jointly observed row,
/// or whose variances vanish, are null.
pub fn dper_estimate<T: Scalar>(ds: &Dataset<T>) -> Result<CovarianceEstimate<T>> {
    ds.require_observed(2)?;
    let d = ds.n_features();
    let moments: Vec<(T, T)> = (0..d).map(|j| ds.observed_moments(j).expect("observed")).collect();
    let mean = DVector::from_fn(d, |j, _| moments[j].0);
    let var = DVector::from_fn(d, |j, _| moments[j].1);
    let floor = T::lit(VARIANCE_FLOOR);

    let mut cov = DMatrix::from_diagonal(&var);
    let mut null = DMatrix::from_element(d, d, false);
    for i in 0..d {
        for j in i + 1..d {
            let stats = pair_stats(ds, i, j, &mean, &var).filter(|_| var[i] >= floor && var[j] >= floor);
            match stats {
                Some(s) => {
                    let sigma = s.solve()?;
                    cov[(i, j)] = sigma;
                    cov[(j, i)] = sigma;
                }
                None => {
                    null[(i, j)] = true;
                    null[(j, i)] = true;
                }
            }
        }
    }
    Ok(CovarianceEstimate { mean, cov, null_mask: null, method: NAME.to_owned(), convergence: None })
}
