//! Controlled missingness: uniform MCAR cell masking and monotone image-corner blocks.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`, which is
//! specified independently of platform and word size, so a mask is a pure
//! function of `(shape, parameters, seed)`.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum number of observed cells random masking leaves in each feature.
pub const MIN_OBSERVED_PER_FEATURE: usize = 2;

/// Which corner of the image the monotone block occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    #[default]
    BottomRight,
    TopRight,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fraction of cells that are missing.
pub fn missing_rate<T: Scalar>(ds: &Dataset<T>) -> f64 {
    let total = ds.n_samples() * ds.n_features();
    ds.missing_count() as f64 / total as f64
}

/// Masks exactly `round(rate * n * d)` cells drawn uniformly without
/// replacement, then redraws cells from any feature left with fewer than
/// [`MIN_OBSERVED_PER_FEATURE`] observed entries.
pub fn apply_random<T: Scalar>(ds: &Dataset<T>, rate: f64, seed: u64) -> Result<Dataset<T>> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidParameter(format!("missing rate {rate} outside (0, 1)")));
    }
    let missing = ds.missing_count();
    if missing > 0 {
        return Err(Error::NotComplete { missing });
    }
    let (n, d) = (ds.n_samples(), ds.n_features());
    let total = n * d;
    let target = (rate * total as f64).round() as usize;
    let cap = n.saturating_sub(MIN_OBSERVED_PER_FEATURE);
    if target > cap * d {
        return Err(Error::FloorUnsatisfiable { requested: target, max: cap * d });
    }

    let mut rng = rng_from_seed(seed);
    let mut mask = DMatrix::from_element(n, d, true);
    let mut per_feature = vec![0usize; d];
    // Cells are indexed row-major: cell = i * d + j.
    for cell in index::sample(&mut rng, total, target) {
        let (i, j) = (cell / d, cell % d);
        mask[(i, j)] = false;
        per_feature[j] += 1;
    }

    for j in 0..d {
        if per_feature[j] <= cap {
            continue;
        }
        let excess = per_feature[j] - cap;
        let masked_rows: Vec<usize> = (0..n).filter(|&i| !mask[(i, j)]).collect();
        for k in index::sample(&mut rng, masked_rows.len(), excess) {
            mask[(masked_rows[k], j)] = true;
        }
        per_feature[j] = cap;
        for _ in 0..excess {
            let candidates: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..d).map(move |c| (i, c)))
                .filter(|&(i, c)| mask[(i, c)] && per_feature[c] < cap)
                .collect();
            // The global cap check above guarantees a candidate exists.
            let (i, c) = candidates[rng.random_range(0..candidates.len())];
            mask[(i, c)] = false;
            per_feature[c] += 1;
        }
    }
    ds.with_mask(mask)
}

/// Side length of the removed block along one image axis.
pub fn block_side(fraction: f64, extent: usize) -> usize {
    // Tolerance absorbs products such as 0.3 * 10 = 3.0000000000000004.
    let side = (fraction * extent as f64 - 1e-9).ceil().max(1.0) as usize;
    side.min(extent)
}

/// Feature indices of the corner block for an `height x width` image.
pub fn block_features(height: usize, width: usize, fraction: f64, corner: Corner) -> Vec<usize> {
    let bh = block_side(fraction, height);
    let bw = block_side(fraction, width);
    let rows = match corner {
        Corner::BottomRight => height - bh..height,
        Corner::TopRight => 0..bh,
    };
    rows.flat_map(|r| (width - bw..width).map(move |c| r * width + c)).collect()
}

/// Removes the same corner block of pixels from a seeded random subset of
/// `round(affected_row_fraction * n)` samples (at least one).
pub fn apply_monotone_block<T: Scalar>(
    ds: &Dataset<T>,
    block_fraction: f64,
    affected_row_fraction: f64,
    corner: Corner,
    seed: u64,
) -> Result<Dataset<T>> {
    let (height, width) = ds.image_shape().ok_or(Error::NoImageShape)?;
    if !(block_fraction > 0.0 && block_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "block fraction {block_fraction} outside (0, 1)"
        )));
    }
    if !(affected_row_fraction > 0.0 && affected_row_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "affected row fraction {affected_row_fraction} outside (0, 1]"
        )));
    }
    let missing = ds.missing_count();
    if missing > 0 {
        return Err(Error::NotComplete { missing });
    }
    let n = ds.n_samples();
    let affected = ((affected_row_fraction * n as f64).round() as usize).clamp(1, n);
    let features = block_features(height, width, block_fraction, corner);

    let mut rng = rng_from_seed(seed);
    let mut rows = index::sample(&mut rng, n, affected).into_vec();
    rows.sort_unstable();

    let mut mask = DMatrix::from_element(n, ds.n_features(), true);
    for &i in &rows {
        for &f in &features {
            mask[(i, f)] = false;
        }
    }
    ds.with_mask(mask)
}
