//! Fuzzy k-nearest-neighbor graph construction.
//!
//! Three steps, each exposed for testing: an exact brute-force kNN search,
//! a per-point bandwidth calibration (the bisection that finds `sigma_i`
//! so the local weight mass hits a target), and the fuzzy union that
//! symmetrizes directed weights into one sparse graph. Exactness is
//! deliberate: at the scales this crate targets, O(N²·D) with parallel
//! rows is cheap, and exact neighbors remove a whole class of flaky tests.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::dist::squared_distance_raw;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Exact k-nearest-neighbor lists, one sorted row per point.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    n: usize,
    k: usize,
    /// Row-major n×k neighbor ids; row i never contains i.
    neighbor_ids: Vec<u32>,
    /// Row-major n×k distances, nondecreasing within each row.
    neighbor_dists: Vec<f64>,
}

impl KnnIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ids(&self, i: usize) -> &[u32] {
        &self.neighbor_ids[i * self.k..(i + 1) * self.k]
    }

    pub fn dists(&self, i: usize) -> &[f64] {
        &self.neighbor_dists[i * self.k..(i + 1) * self.k]
    }
}

/// One undirected edge of the fuzzy graph, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    pub w: f64,
}

/// Sparse symmetric weighted adjacency with per-point calibration data.
///
/// Weights live in (0, 1]; absent pairs are exactly zero. `degree[i]` is
/// the sum of weights incident to i — downstream it scales the star pull.
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    n: usize,
    edges: Vec<Edge>,
    rho: Vec<f64>,
    sigma: Vec<f64>,
    degree: Vec<f64>,
}

impl FuzzyGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges sorted by (i, j); the optimizer relies on this fixed order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().fold(0.0, |m, e| m.max(e.w))
    }

    /// Build directly from a dense symmetric weight matrix (row-major
    /// n×n, zero diagonal, entries in [0, 1]). Meant for tests and for
    /// diffing against other implementations; rho/sigma are filled with
    /// placeholders since no calibration happened.
    pub fn from_dense(n: usize, weights: &[f64]) -> Result<FuzzyGraph> {
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a {n}x{n} matrix",
                weights.len()
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let w = weights[i * n + j];
                if w != weights[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "weights not symmetric at ({i}, {j})"
                    )));
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidInput(format!(
                        "weight {w} at ({i}, {j}) outside [0, 1]"
                    )));
                }
                if w > 0.0 {
                    edges.push(Edge {
                        i: i as u32,
                        j: j as u32,
                        w,
                    });
                }
            }
        }
        let degree = degrees_from_edges(n, &edges);
        Ok(FuzzyGraph {
            n,
            edges,
            rho: vec![0.0; n],
            sigma: vec![1.0; n],
            degree,
        })
    }

    /// Dump edges as `i,j,w` CSV for cross-implementation diffing.
    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,w")?;
        for e in &self.edges {
            writeln!(out, "{},{},{}", e.i, e.j, e.w)?;
        }
        Ok(())
    }
}

fn degrees_from_edges(n: usize, edges: &[Edge]) -> Vec<f64> {
    let mut degree = vec![0.0; n];
    for e in edges {
        degree[e.i as usize] += e.w;
        degree[e.j as usize] += e.w;
    }
    degree
}

/// Exact k nearest neighbors of every row, brute force, parallel over rows.
///
/// Ties in distance break toward the smaller index, so the result is a
/// pure function of the input.
///
/// # Errors
/// `k == 0` or `k >= N`.
pub fn build_knn(x: &DataMatrix, k: usize) -> Result<KnnIndex> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "k = {k} must satisfy 1 <= k < N = {n}"
        )));
    }
    debug_assert!(n <= u32::MAX as usize);
    // Non-finite coordinates cannot occur here: DataMatrix rejects them
    // at construction, so every distance below is finite.
    let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut cand: Vec<(f64, u32)> = Vec::with_capacity(n - 1);
            for j in 0..n {
                if j != i {
                    cand.push((squared_distance_raw(xi, x.row(j)), j as u32));
                }
            }
            let by_dist_then_id =
                |a: &(f64, u32), b: &(f64, u32)| a.partial_cmp(b).expect("finite distances");
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist_then_id);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_dist_then_id);
            let ids = cand.iter().map(|&(_, j)| j).collect();
            let dists = cand.iter().map(|&(d2, _)| d2.sqrt()).collect();
            (ids, dists)
        })
        .collect();

    let mut neighbor_ids = Vec::with_capacity(n * k);
    let mut neighbor_dists = Vec::with_capacity(n * k);
    for (ids, dists) in rows {
        neighbor_ids.extend_from_slice(&ids);
        neighbor_dists.extend_from_slice(&dists);
    }
    Ok(KnnIndex {
        n,
        k,
        neighbor_ids,
        neighbor_dists,
    })
}

/// How close the bisection must get to the target weight mass.
pub const CALIBRATION_TOLERANCE: f64 = 1e-5;

/// Per-point bandwidth calibration.
///
/// Given a point's sorted neighbor distances, returns `rho` (the nearest
/// distance) and the `sigma` solving
///
/// ```text
/// sum_l exp(-max(0, d_l - rho) / sigma) = target
/// ```
///
/// by bisection until the residual is within [`CALIBRATION_TOLERANCE`].
/// `sigma` is clamped to `[1e-3 * mean(dists), 1e3]`; when the target is
/// unreachable inside that interval (all-equal distances, or a target at
/// or below the tie count) the nearer clamp bound is returned and the
/// residual is whatever the clamp allows.
///
/// # Errors
/// Empty or unsorted `dists`, or a non-positive target.
pub fn smooth_knn_calibrate(dists: &[f64], target: f64) -> Result<(f64, f64)> {
    if dists.is_empty() {
        return Err(Error::InvalidInput("no neighbor distances".into()));
    }
    if dists.windows(2).any(|w| w[0] > w[1]) || dists[0] < 0.0 {
        return Err(Error::InvalidInput(
            "neighbor distances must be sorted ascending and nonnegative".into(),
        ));
    }
    if target <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "calibration target {target} must be positive"
        )));
    }
    let rho = dists[0];
    let mean: f64 = dists.iter().sum::<f64>() / dists.len() as f64;
    // The lower clamp collapses to zero for all-zero distance rows
    // (duplicated points); keep sigma strictly positive regardless.
    let lo = (1e-3 * mean).max(1e-12);
    let hi: f64 = 1e3;
    if lo >= hi {
        // Distances on the order of 1e6 or more; the clamp interval is
        // empty and the graph degenerates no matter what we pick.
        return Ok((rho, hi));
    }

    let mass = |sigma: f64| -> f64 {
        dists
            .iter()
            .map(|&d| {
                let x = d - rho;
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / sigma).exp()
                }
            })
            .sum()
    };

    if mass(lo) >= target {
        return Ok((rho, lo));
    }
    if mass(hi) <= target {
        return Ok((rho, hi));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut sigma = 0.5 * (lo + hi);
    for _ in 0..100 {
        let m = mass(sigma);
        if (m - target).abs() <= CALIBRATION_TOLERANCE * 0.1 {
            break;
        }
        if m < target {
            lo = sigma;
        } else {
            hi = sigma;
        }
        sigma = 0.5 * (lo + hi);
    }
    Ok((rho, sigma))
}

/// Directed membership weights, one n×k row-major block.
///
/// `w = exp(-max(0, d - rho_i) / sigma_i)`; the nearest neighbor sits at
/// `d == rho_i`, so its weight is exactly 1.
pub fn directed_weights(index: &KnnIndex, rho: &[f64], sigma: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (index.n(), index.k());
    if rho.len() != n || sigma.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "calibration arrays of length {}/{} for {n} points",
            rho.len(),
            sigma.len()
        )));
    }
    let mut weights = vec![0.0; n * k];
    for i in 0..n {
        let dists = index.dists(i);
        let row = &mut weights[i * k..(i + 1) * k];
        for (w, &d) in row.iter_mut().zip(dists) {
            let x = d - rho[i];
            *w = if x <= 0.0 { 1.0 } else { (-x / sigma[i]).exp() };
        }
    }
    Ok(weights)
}

/// Symmetrize directed weights with the fuzzy union
/// `w = w_ab + w_ba - w_ab * w_ba` and assemble the graph.
///
/// Each unordered pair is stored once with `i < j`; edges come out sorted
/// by (i, j). A pair is dropped only if both directions underflowed to
/// exactly zero, keeping the "absent means zero" contract.
pub fn fuzzy_union(
    index: &KnnIndex,
    weights: &[f64],
    rho: Vec<f64>,
    sigma: Vec<f64>,
) -> Result<FuzzyGraph> {
    let (n, k) = (index.n(), index.k());
    if weights.len() != n * k {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for an {n}x{k} index",
            weights.len()
        )));
    }
    let mut union: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for i in 0..n {
        let ids = index.ids(i);
        let row = &weights[i * k..(i + 1) * k];
        for (&j, &w) in ids.iter().zip(row) {
            let key = if (i as u32) < j {
                (i as u32, j)
            } else {
                (j, i as u32)
            };
            let acc = union.entry(key).or_insert(0.0);
            *acc = *acc + w - *acc * w;
        }
    }
    let edges: Vec<Edge> = union
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|((i, j), w)| Edge { i, j, w })
        .collect();
    let degree = degrees_from_edges(n, &edges);
    Ok(FuzzyGraph {
        n,
        edges,
        rho,
        sigma,
        degree,
    })
}

/// Full pipeline from data to fuzzy graph with the standard target
/// weight mass log2(k).
pub fn build_fuzzy_graph(x: &DataMatrix, k: usize) -> Result<FuzzyGraph> {
    let index = build_knn(x, k)?;
    let n = index.n();
    let target = (k as f64).log2();
    let calibrated: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dists = index.dists(i);
            if k == 1 {
                // A single neighbor always carries weight 1; the weight
                // mass is constant in sigma, so take the lower clamp.
                let mean = dists[0];
                Ok((dists[0], (1e-3 * mean).max(1e-12)))
            } else {
                smooth_knn_calibrate(dists, target)
            }
        })
        .collect::<Result<_>>()?;
    let rho: Vec<f64> = calibrated.iter().map(|&(r, _)| r).collect();
    let sigma: Vec<f64> = calibrated.iter().map(|&(_, s)| s).collect();
    let weights = directed_weights(&index, &rho, &sigma)?;
    fuzzy_union(&index, &weights, rho, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = Rng::new(seed);
        DataMatrix::new(n, d, (0..n * d).map(|_| rng.next_normal()).collect()).unwrap()
    }

    /// Independent neighbor oracle: full sort of all pairs per row.
    fn brute_force_knn(x: &DataMatrix, k: usize) -> Vec<Vec<u32>> {
        let n = x.rows();
        (0..n)
            .map(|i| {
                let mut all: Vec<(f64, u32)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let mut d2 = 0.0;
                        for c in 0..x.cols() {
                            let diff = x.get(i, c) - x.get(j, c);
                            d2 += diff * diff;
                        }
                        (d2, j as u32)
                    })
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                all.truncate(k);
                all.into_iter().map(|(_, j)| j).collect()
            })
            .collect()
    }

    #[test]
    fn nearest_on_a_line() {
        let x = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let idx = build_knn(&x, 1).unwrap();
        assert_eq!(idx.ids(0), &[1]);
        assert_eq!(idx.ids(1), &[0]);
        assert_eq!(idx.ids(2), &[1]);
        assert_eq!(idx.dists(2), &[9.0]);
    }

    #[test]
    fn unit_square_prefers_adjacent_corners() {
        let x = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let idx = build_knn(&x, 2).unwrap();
        // Each corner's two neighbors are the adjacent corners at distance
        // 1, never the diagonal; equal distances order by index.
        assert_eq!(idx.ids(0), &[1, 2]);
        assert_eq!(idx.ids(1), &[0, 3]);
        assert_eq!(idx.ids(2), &[0, 3]);
        assert_eq!(idx.ids(3), &[1, 2]);
        for i in 0..4 {
            assert_eq!(idx.dists(i), &[1.0, 1.0]);
        }
    }

    #[test]
    fn matches_brute_force_oracle() {
        let x = random_matrix(50, 5, 1234);
        let idx = build_knn(&x, 10).unwrap();
        let oracle = brute_force_knn(&x, 10);
        for (i, expected) in oracle.iter().enumerate() {
            assert_eq!(idx.ids(i), expected.as_slice(), "row {i}");
        }
        // Distances nondecreasing, no self, no duplicates.
        for i in 0..50 {
            let ids = idx.ids(i);
            assert!(!ids.contains(&(i as u32)));
            let mut seen = ids.to_vec();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), ids.len());
            let d = idx.dists(i);
            assert!(d.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn knn_rejects_bad_k() {
        let x = random_matrix(5, 2, 1);
        assert!(build_knn(&x, 0).is_err());
        assert!(build_knn(&x, 5).is_err());
        assert!(build_knn(&x, 4).is_ok());
    }

    #[test]
    fn calibration_hits_target_mass() {
        let target = 3f64.log2();
        let (rho, sigma) = smooth_knn_calibrate(&[1.0, 2.0, 3.0], target).unwrap();
        assert_eq!(rho, 1.0);
        // Re-evaluate the mass independently of the solver.
        let mass = 1.0 + (-1.0 / sigma).exp() + (-2.0 / sigma).exp();
        assert!(
            (mass - target).abs() <= CALIBRATION_TOLERANCE,
            "residual {}",
            (mass - target).abs()
        );
    }

    #[test]
    fn calibration_all_equal_distances_clamps_low() {
        // Every exponent is zero, the mass is 4 regardless of sigma.
        let (rho, sigma) = smooth_knn_calibrate(&[5.0, 5.0, 5.0, 5.0], 2.0).unwrap();
        assert_eq!(rho, 5.0);
        assert_eq!(sigma, 1e-3 * 5.0);
    }

    #[test]
    fn calibration_unreachable_target_clamps_low() {
        // Mass is 1 + exp(-10/sigma) > 1 for every sigma; target 1 sits
        // below the reachable range.
        let (rho, sigma) = smooth_knn_calibrate(&[0.0, 10.0], 1.0).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(sigma, 1e-3 * 5.0);
    }

    #[test]
    fn calibration_rejects_bad_input() {
        assert!(smooth_knn_calibrate(&[], 1.0).is_err());
        assert!(smooth_knn_calibrate(&[2.0, 1.0], 1.0).is_err());
        assert!(smooth_knn_calibrate(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn directed_weight_values() {
        // Two points on a line: each row has one neighbor at d = rho.
        let x = DataMatrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let idx = build_knn(&x, 1).unwrap();
        let w = directed_weights(&idx, &[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(w, vec![1.0, 1.0]); // d == rho, exponent exactly zero

        // d = rho + sigma gives e^{-1}.
        let w = directed_weights(&idx, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((w[0] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn directed_weights_match_scalar_reevaluation() {
        let x = random_matrix(50, 5, 99);
        let idx = build_knn(&x, 10).unwrap();
        let target = 10f64.log2();
        let mut rho = vec![0.0; 50];
        let mut sigma = vec![0.0; 50];
        for i in 0..50 {
            let (r, s) = smooth_knn_calibrate(idx.dists(i), target).unwrap();
            rho[i] = r;
            sigma[i] = s;
        }
        let w = directed_weights(&idx, &rho, &sigma).unwrap();
        for i in 0..50 {
            for (l, &d) in idx.dists(i).iter().enumerate() {
                let expect = (-((d - rho[i]).max(0.0)) / sigma[i]).exp();
                assert!((w[i * 10 + l] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn union_combines_directed_pairs() {
        // Hand-built index over 2 points so the directed weights are
        // fully controlled.
        let idx = KnnIndex {
            n: 2,
            k: 1,
            neighbor_ids: vec![1, 0],
            neighbor_dists: vec![1.0, 1.0],
        };
        let g = fuzzy_union(&idx, &[1.0, 1.0], vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(g.edges(), &[Edge { i: 0, j: 1, w: 1.0 }]);

        let g = fuzzy_union(&idx, &[0.5, 0.0], vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(g.edges()[0].w, 0.5);

        let g = fuzzy_union(&idx, &[0.5, 0.5], vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(g.edges()[0].w, 0.75);
        assert_eq!(g.degree(), &[0.75, 0.75]);
    }

    #[test]
    fn union_bounds_property() {
        let mut rng = Rng::new(5);
        for _ in 0..1000 {
            let a = rng.next_f64();
            let b = rng.next_f64();
            let u = a + b - a * b;
            assert!(u >= a.max(b) - 1e-15);
            assert!(u <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn full_graph_invariants_on_random_data() {
        let x = random_matrix(120, 4, 7);
        let g = build_fuzzy_graph(&x, 15).unwrap();
        assert_eq!(g.n(), 120);
        let mut prev: Option<(u32, u32)> = None;
        for e in g.edges() {
            assert!(e.i < e.j, "stored once per unordered pair, i < j");
            assert!(e.w > 0.0 && e.w <= 1.0, "w = {}", e.w);
            if let Some(p) = prev {
                assert!((e.i, e.j) > p, "edges sorted");
            }
            prev = Some((e.i, e.j));
        }
        // Degrees are incident sums.
        let recomputed = degrees_from_edges(g.n(), g.edges());
        for (deg, rec) in g.degree().iter().zip(&recomputed) {
            assert!((deg - rec).abs() <= 1e-12);
        }
        // Every point has positive sigma and a nonnegative rho.
        assert!(g.sigma().iter().all(|&s| s > 0.0));
        assert!(g.rho().iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn k1_graph_builds_without_calibration() {
        let x = random_matrix(10, 3, 21);
        let g = build_fuzzy_graph(&x, 1).unwrap();
        // Every directed weight is 1, so every union weight is 1.
        assert!(g.edges().iter().all(|e| e.w == 1.0));
    }

    #[test]
    fn from_dense_validates_and_builds() {
        let w = vec![
            0.0, 0.5, 0.0, //
            0.5, 0.0, 1.0, //
            0.0, 1.0, 0.0,
        ];
        let g = FuzzyGraph::from_dense(3, &w).unwrap();
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.degree()[1], 1.5);

        let asym = vec![
            0.0, 0.5, //
            0.4, 0.0,
        ];
        assert!(FuzzyGraph::from_dense(2, &asym).is_err());
    }

    #[test]
    fn edge_dump_is_parseable_csv() {
        let x = random_matrix(6, 2, 3);
        let g = build_fuzzy_graph(&x, 2).unwrap();
        let mut buf = Vec::new();
        g.write_edges_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,w"));
        for line in lines {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts.len(), 3);
            let i: u32 = parts[0].parse().unwrap();
            let j: u32 = parts[1].parse().unwrap();
            let w: f64 = parts[2].parse().unwrap();
            assert!(i < j);
            assert!(w > 0.0 && w <= 1.0);
        }
    }
}
