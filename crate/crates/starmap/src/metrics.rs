//! Embedding quality metrics.
//!
//! Two complementary views: leave-one-out kNN classification accuracy
//! measures whether local neighborhoods keep their class identity, and
//! the Pearson correlation between high- and low-dimensional pairwise
//! distances measures whether the global shape survived. Both are pure
//! functions; the distance correlation caps its cost with a seeded pair
//! sample on large inputs.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::squared_distance_raw;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::Rng;

/// Neighbor count used by the evaluation protocol unless overridden.
pub const DEFAULT_KNN_K: usize = 5;
/// Pair cap for the distance correlation.
pub const DEFAULT_MAX_PAIRS: usize = 5_000_000;

/// One evaluation of an embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub knn_accuracy: f64,
    pub distance_correlation: f64,
    pub n_pairs_sampled: usize,
    pub elapsed_seconds: f64,
}

/// Leave-one-out kNN classification accuracy.
///
/// Each point is classified by majority vote of its `k` nearest
/// neighbors (itself excluded, distance ties toward the smaller index).
/// A vote tie is broken toward the tied label that appears earliest in
/// the distance-ordered neighbor list, which is deterministic and
/// scale-free. Returns the fraction classified correctly.
///
/// # Errors
/// `k == 0`, `k >= N`, a length mismatch, or fewer than 2 distinct
/// labels.
pub fn knn_accuracy(y: &DataMatrix, labels: &[usize], k: usize) -> Result<f64> {
    let n = y.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "k = {k} must satisfy 1 <= k < N = {n}"
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::InvalidInput(
            "need at least 2 distinct labels to classify".into(),
        ));
    }

    let correct: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y.row(i);
            let mut cand: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance_raw(yi, y.row(j)), j as u32))
                .collect();
            let by_dist_then_id =
                |a: &(f64, u32), b: &(f64, u32)| a.partial_cmp(b).expect("finite distances");
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist_then_id);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_dist_then_id);

            let mut votes = vec![0usize; n_classes];
            for &(_, j) in &cand {
                votes[labels[j as usize]] += 1;
            }
            let top = *votes.iter().max().expect("k >= 1");
            // Among labels sharing the top vote count, the one whose
            // first appearance in the neighbor list is nearest wins.
            let predicted = cand
                .iter()
                .map(|&(_, j)| labels[j as usize])
                .find(|&l| votes[l] == top)
                .expect("some neighbor holds the top label");
            usize::from(predicted == labels[i])
        })
        .sum();
    Ok(correct as f64 / n as f64)
}

/// Pearson correlation between the pairwise distances of `x` and `y`
/// over pairs `i < j`. When the pair count exceeds `max_pairs`, a seeded
/// uniform sample (with replacement) of `max_pairs` pairs is measured
/// instead. Returns the coefficient and the number of pairs used.
///
/// # Errors
/// Row-count mismatch, fewer than 3 rows, or zero variance in either
/// distance vector.
pub fn distance_correlation(
    x: &DataMatrix,
    y: &DataMatrix,
    max_pairs: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "x has {n} rows, y has {}",
            y.rows()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 rows, got {n}"
        )));
    }
    if max_pairs == 0 {
        return Err(Error::InvalidInput("max_pairs must be positive".into()));
    }
    let all_pairs = n * (n - 1) / 2;
    let (dx, dy) = if all_pairs <= max_pairs {
        // Full enumeration, parallel over the first index; per-row
        // blocks are concatenated in order, so the result is stable.
        let per_row: Vec<(Vec<f64>, Vec<f64>)> = (0..n - 1)
            .into_par_iter()
            .map(|i| {
                let mut dx = Vec::with_capacity(n - 1 - i);
                let mut dy = Vec::with_capacity(n - 1 - i);
                for j in (i + 1)..n {
                    dx.push(squared_distance_raw(x.row(i), x.row(j)).sqrt());
                    dy.push(squared_distance_raw(y.row(i), y.row(j)).sqrt());
                }
                (dx, dy)
            })
            .collect();
        let mut dx = Vec::with_capacity(all_pairs);
        let mut dy = Vec::with_capacity(all_pairs);
        for (px, py) in per_row {
            dx.extend(px);
            dy.extend(py);
        }
        (dx, dy)
    } else {
        // The pair list is drawn sequentially from the seed, then the
        // distances are computed in parallel preserving order.
        let mut rng = Rng::new(seed);
        let pairs: Vec<(u32, u32)> = (0..max_pairs)
            .map(|_| loop {
                let i = rng.next_index(n);
                let j = rng.next_index(n);
                if i != j {
                    return (i as u32, j as u32);
                }
            })
            .collect();
        let dx: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| squared_distance_raw(x.row(i as usize), x.row(j as usize)).sqrt())
            .collect();
        let dy: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| squared_distance_raw(y.row(i as usize), y.row(j as usize)).sqrt())
            .collect();
        (dx, dy)
    };

    let m = dx.len() as f64;
    let mx: f64 = dx.iter().sum::<f64>() / m;
    let my: f64 = dy.iter().sum::<f64>() / m;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in dx.iter().zip(&dy) {
        let (da, db) = (a - mx, b - my);
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidInput(
            "distance vector has zero variance (degenerate input)".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok((r, dx.len()))
}
