//! K-means clustering for anchor discovery.
//!
//! Anchors are cluster centers in input space together with the
//! point-to-cluster assignment; downstream they are projected next to the
//! data and act as fixed attractors. Seeding is k-means++, iteration is
//! Lloyd's algorithm with deterministic tie-breaking, and empty clusters
//! are repaired by stealing the point farthest from its own center (an
//! anchor with no assigned points would exert no force and waste a star).
//!
//! High-dimensional inputs can be projected to at most 50 principal
//! components before clustering ([`maybe_prereduce`]); the returned
//! centers are then lifted back to input space as per-cluster means of
//! the original rows so the joint initialization still happens in input
//! space.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::dist::squared_distance_raw;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::pca::fit_pca;
use crate::rng::Rng;

/// Default Lloyd iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100;
/// Default convergence threshold on center movement.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Dimension cap for the clustering-side projection.
const PREREDUCE_DIM: usize = 50;

/// Cluster centers plus the assignment that produced them.
///
/// `counts[c]` is the number of points assigned to center `c`; no count
/// is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    pub centers: DataMatrix,
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
}

impl Anchors {
    pub fn c(&self) -> usize {
        self.centers.rows()
    }
}

/// Cluster `x` into `c` groups. Same seed, same result.
///
/// # Errors
/// `c == 0` or `c > N`.
pub fn kmeans_fit(x: &DataMatrix, c: usize, seed: u64) -> Result<Anchors> {
    kmeans_fit_traced(x, c, seed, DEFAULT_MAX_ITER, DEFAULT_TOL).map(|(a, _)| a)
}

/// [`kmeans_fit`] with explicit iteration controls, also returning the
/// within-cluster sum of squares after every iteration. The trace is
/// nonincreasing; tests pin that.
pub fn kmeans_fit_traced(
    x: &DataMatrix,
    c: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<(Anchors, Vec<f64>)> {
    let (n, d) = (x.rows(), x.cols());
    if c == 0 || c > n {
        return Err(Error::InvalidInput(format!(
            "c = {c} must satisfy 1 <= c <= N = {n}"
        )));
    }
    if c == n {
        // Degenerate but well-defined: every point is its own center.
        let anchors = Anchors {
            centers: x.clone(),
            assignment: (0..n).collect(),
            counts: vec![1; n],
        };
        return Ok((anchors, vec![0.0]));
    }

    let mut rng = Rng::new(seed);
    let mut centers = plus_plus_seed(x, c, &mut rng);
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let mut next = assign_nearest(x, &centers, c);
        let mut sizes = count_assignments(c, &next);
        let repaired = repair_empties(x, &mut centers, &mut next, &mut sizes);
        let changed = next != assignment;
        assignment = next;
        let (new_centers, _) = cluster_means(x, &assignment, c);
        let movement = max_center_shift(&centers, &new_centers, c, d);
        centers = new_centers;
        let w = wcss(x, &centers, &assignment);
        if let Some(&prev) = trace.last() {
            debug_assert!(
                w <= prev * (1.0 + 1e-9) + 1e-9,
                "objective rose from {prev} to {w}"
            );
        }
        trace.push(w);
        // Stop only on an iteration that needed no repair: a repair moves
        // a point by fiat, so the next pass must re-check assignments.
        if !repaired && (!changed || movement < tol) {
            break;
        }
    }
    let counts = count_assignments(c, &assignment);
    let anchors = Anchors {
        centers: DataMatrix::new(c, d, centers)?,
        assignment,
        counts,
    };
    Ok((anchors, trace))
}

/// Default anchor count for a dataset of `n` points:
/// `clamp(n / 500, 1, 100)`.
pub fn heuristic_c(n: usize) -> usize {
    (n / 500).clamp(1, 100)
}

/// Project to at most 50 principal components when the input is wider
/// than `threshold_d` columns, for clustering only. Below the threshold
/// the input is returned as-is (borrowed, no copy).
pub fn maybe_prereduce(x: &DataMatrix, threshold_d: usize) -> Result<Cow<'_, DataMatrix>> {
    if x.cols() <= threshold_d {
        return Ok(Cow::Borrowed(x));
    }
    let q = PREREDUCE_DIM.min(x.cols()).min(x.rows());
    let model = fit_pca(x, q)?;
    Ok(Cow::Owned(model.transform(x)?))
}

/// Per-cluster means of the original rows — the lift back to input space
/// after clustering in a projection.
pub fn lift_anchors(x: &DataMatrix, assignment: &[usize], c: usize) -> Result<DataMatrix> {
    if assignment.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} assignments for {} rows",
            assignment.len(),
            x.rows()
        )));
    }
    let (means, counts) = cluster_means(x, assignment, c);
    if let Some(empty) = counts.iter().position(|&k| k == 0) {
        return Err(Error::InvalidInput(format!(
            "cluster {empty} has no assigned points"
        )));
    }
    DataMatrix::new(c, x.cols(), means)
}

/// The full anchor path: optional pre-reduction, k-means in the working
/// space, centers lifted back to input space when a projection was used.
pub fn cluster_anchors(
    x: &DataMatrix,
    c: usize,
    prereduce_threshold: usize,
    seed: u64,
) -> Result<Anchors> {
    let working = maybe_prereduce(x, prereduce_threshold)?;
    let mut anchors = kmeans_fit(&working, c, seed)?;
    if matches!(working, Cow::Owned(_)) {
        anchors.centers = lift_anchors(x, &anchors.assignment, c)?;
    }
    Ok(anchors)
}

/// k-means++: first center uniform, each next center sampled with
/// probability proportional to squared distance from the chosen set.
fn plus_plus_seed(x: &DataMatrix, c: usize, rng: &mut Rng) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let mut centers = Vec::with_capacity(c * d);
    let first = rng.next_index(n);
    centers.extend_from_slice(x.row(first));
    let mut dist2 = vec![f64::INFINITY; n];
    for t in 1..c {
        let last = centers[(t - 1) * d..t * d].to_vec();
        dist2
            .par_iter_mut()
            .zip(x.data().par_chunks(d))
            .for_each(|(d2, row)| {
                *d2 = d2.min(squared_distance_raw(row, &last));
            });
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let r = rng.next_f64() * total;
            let mut cum = 0.0;
            let mut pick = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                cum += w;
                if cum > r {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining mass is on already-chosen positions
            // (duplicate-heavy data): fall back to uniform.
            rng.next_index(n)
        };
        centers.extend_from_slice(x.row(pick));
    }
    centers
}

fn assign_nearest(x: &DataMatrix, centers: &[f64], c: usize) -> Vec<usize> {
    let d = x.cols();
    x.data()
        .par_chunks(d)
        .map(|row| {
            let mut best = 0;
            let mut best_d2 = squared_distance_raw(row, &centers[..d]);
            for k in 1..c {
                let d2 = squared_distance_raw(row, &centers[k * d..(k + 1) * d]);
                // Strict comparison keeps the smaller index on ties.
                if d2 < best_d2 {
                    best = k;
                    best_d2 = d2;
                }
            }
            best
        })
        .collect()
}

fn count_assignments(c: usize, assignment: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; c];
    for &a in assignment {
        counts[a] += 1;
    }
    counts
}

/// Give every empty cluster the point currently farthest from its own
/// center (ties toward the smaller point index). The stolen point also
/// becomes the empty cluster's center so later repairs in the same pass
/// see it. Returns whether anything moved.
fn repair_empties(
    x: &DataMatrix,
    centers: &mut [f64],
    assignment: &mut [usize],
    sizes: &mut [usize],
) -> bool {
    let d = x.cols();
    let mut repaired = false;
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let mut donor: Option<(f64, usize)> = None;
        for (i, &a) in assignment.iter().enumerate() {
            if sizes[a] > 1 {
                let d2 = squared_distance_raw(x.row(i), &centers[a * d..(a + 1) * d]);
                if donor.is_none_or(|(best, _)| d2 > best) {
                    donor = Some((d2, i));
                }
            }
        }
        let (_, i) = donor.expect("some cluster has at least two points");
        sizes[assignment[i]] -= 1;
        sizes[empty] += 1;
        assignment[i] = empty;
        centers[empty * d..(empty + 1) * d].copy_from_slice(x.row(i));
        repaired = true;
    }
    repaired
}

/// Per-cluster sums accumulated over fixed row chunks and combined in
/// chunk order, so the means do not depend on thread scheduling.
fn cluster_means(x: &DataMatrix, assignment: &[usize], c: usize) -> (Vec<f64>, Vec<usize>) {
    let (n, d) = (x.rows(), x.cols());
    let chunk_rows = n.div_ceil(8).max(1);
    let partials: Vec<(Vec<f64>, Vec<usize>)> = (0..n.div_ceil(chunk_rows))
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * chunk_rows;
            let hi = (lo + chunk_rows).min(n);
            let mut sums = vec![0.0; c * d];
            let mut counts = vec![0usize; c];
            let rows = x.data()[lo * d..hi * d].chunks_exact(d);
            for (&a, row) in assignment[lo..hi].iter().zip(rows) {
                counts[a] += 1;
                let dst = &mut sums[a * d..(a + 1) * d];
                for (s, &v) in dst.iter_mut().zip(row) {
                    *s += v;
                }
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![0.0; c * d];
    let mut counts = vec![0usize; c];
    for (ps, pc) in partials {
        for (s, v) in sums.iter_mut().zip(ps) {
            *s += v;
        }
        for (k, v) in counts.iter_mut().zip(pc) {
            *k += v;
        }
    }
    for k in 0..c {
        if counts[k] > 0 {
            let inv = 1.0 / counts[k] as f64;
            for s in &mut sums[k * d..(k + 1) * d] {
                *s *= inv;
            }
        }
    }
    (sums, counts)
}

fn max_center_shift(old: &[f64], new: &[f64], c: usize, d: usize) -> f64 {
    let mut max = 0.0f64;
    for k in 0..c {
        let d2 = squared_distance_raw(&old[k * d..(k + 1) * d], &new[k * d..(k + 1) * d]);
        max = max.max(d2.sqrt());
    }
    max
}

fn wcss(x: &DataMatrix, centers: &[f64], assignment: &[usize]) -> f64 {
    let (n, d) = (x.rows(), x.cols());
    let chunk_rows = n.div_ceil(8).max(1);
    let partials: Vec<f64> = (0..n.div_ceil(chunk_rows))
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * chunk_rows;
            let hi = (lo + chunk_rows).min(n);
            let mut acc = 0.0;
            let rows = x.data()[lo * d..hi * d].chunks_exact(d);
            for (&a, row) in assignment[lo..hi].iter().zip(rows) {
                acc += squared_distance_raw(row, &centers[a * d..(a + 1) * d]);
            }
            acc
        })
        .collect();
    partials.iter().sum()
}
