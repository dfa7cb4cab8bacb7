//! Euclidean distance kernels.
//!
//! The force and neighbor kernels all consume squared distances, so the
//! squared form is the workhorse and the rooted form is derived from it.
//! Checked wrappers validate dimensions at the API boundary; the `_raw`
//! forms skip the check inside loops that already guarantee shape.

use crate::error::{Error, Result};

/// Squared Euclidean distance without a dimension check.
#[inline]
pub(crate) fn squared_distance_raw(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = 0.0;
    for (a, b) in u.iter().zip(v) {
        let d = a - b;
        acc += d * d;
    }
    acc
}

/// Squared Euclidean distance.
///
/// # Errors
/// Dimension mismatch.
pub fn squared_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(squared_distance_raw(u, v))
}

/// Euclidean distance.
///
/// # Errors
/// Dimension mismatch.
pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    squared_distance(u, v).map(f64::sqrt)
}
