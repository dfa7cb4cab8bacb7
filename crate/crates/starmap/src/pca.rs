//! Principal component analysis.
//!
//! Used in two places: the joint initialization that seeds both the
//! embedding and the star positions from one shared projection, and the
//! optional pre-reduction before clustering on high-dimensional data.
//!
//! Low dimensions (the common case here) get an exact eigendecomposition
//! of the sample covariance; above [`RANDOMIZED_DIM_THRESHOLD`] columns a
//! randomized subspace iteration keeps memory and time flat. The
//! randomized path is seeded with a fixed constant so fits stay
//! reproducible without a seed parameter.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::Rng;

/// Column count above which `fit_pca` switches to the randomized solver.
pub const RANDOMIZED_DIM_THRESHOLD: usize = 2000;
/// Extra sketch columns beyond the requested rank.
const OVERSAMPLE: usize = 10;
/// Subspace-iteration rounds for the randomized solver.
const POWER_ITERATIONS: usize = 20;
/// Fixed seed for the randomized sketch; fits take no seed argument.
const SKETCH_SEED: u64 = 0x5EED_CA5C_ADE0_0001;

/// A fitted PCA basis.
///
/// `components` holds one orthonormal direction per row, ordered by
/// nonincreasing `explained_variance`. Orientation is pinned: each row's
/// largest-magnitude entry is nonnegative, so two fits of the same data
/// are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: DataMatrix,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    /// Project rows into the fitted basis: `(M - mean) · componentsᵀ`.
    pub fn transform(&self, m: &DataMatrix) -> Result<DataMatrix> {
        let d = self.mean.len();
        if m.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "transform input has {} columns, model was fit on {d}",
                m.cols()
            )));
        }
        let q = self.components.rows();
        let comp = self.components.data();
        let out: Vec<f64> = m
            .data()
            .par_chunks(d)
            .flat_map_iter(|row| {
                (0..q).map(move |p| {
                    let mut acc = 0.0;
                    for c in 0..d {
                        acc += (row[c] - self.mean[c]) * comp[p * d + c];
                    }
                    acc
                })
            })
            .collect();
        DataMatrix::new(m.rows(), q, out)
    }
}

/// Fit the top-`q` principal directions of `x`.
///
/// # Errors
/// Fewer than 2 rows, or `q` outside `1..=min(rows, cols)`.
pub fn fit_pca(x: &DataMatrix, q: usize) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 rows to fit, got {n}"
        )));
    }
    if q == 0 || q > n.min(d) {
        return Err(Error::InvalidInput(format!(
            "q = {q} must satisfy 1 <= q <= min(rows, cols) = {}",
            n.min(d)
        )));
    }
    let mean = column_means(x);
    let (mut comp, mut ev) = if d <= RANDOMIZED_DIM_THRESHOLD {
        fit_exact(x, &mean, q)
    } else {
        fit_randomized(x, &mean, q)
    };
    for p in 0..q {
        fix_sign(&mut comp[p * d..(p + 1) * d]);
        ev[p] = ev[p].max(0.0);
    }
    Ok(PcaModel {
        mean,
        components: DataMatrix::new(q, d, comp)?,
        explained_variance: ev,
    })
}

/// Fit on the stacked matrix `[X; A]` and split the projection back into
/// point and anchor coordinates. Centering happens on the stacked matrix,
/// so points and anchors share one frame.
pub fn joint_embed(x: &DataMatrix, a: &DataMatrix, q: usize) -> Result<(DataMatrix, DataMatrix)> {
    let stacked = x.vstack(a)?;
    let model = fit_pca(&stacked, q)?;
    let t = model.transform(&stacked)?;
    let split = x.rows() * q;
    let y0 = DataMatrix::new(x.rows(), q, t.data()[..split].to_vec())?;
    let s = DataMatrix::new(a.rows(), q, t.data()[split..].to_vec())?;
    Ok((y0, s))
}

/// Scale an initial embedding (and its stars, if any) by one common
/// factor so the largest absolute coordinate equals `target_extent`.
/// A single factor preserves every distance ratio between points and
/// stars exactly. All-zero input is returned unchanged.
pub fn rescale_init(
    y0: &DataMatrix,
    stars: Option<&DataMatrix>,
    target_extent: f64,
) -> Result<(DataMatrix, Option<DataMatrix>)> {
    if target_extent <= 0.0 || target_extent.is_nan() {
        return Err(Error::InvalidInput(format!(
            "target extent {target_extent} must be positive"
        )));
    }
    if let Some(s) = stars {
        if s.cols() != y0.cols() {
            return Err(Error::DimensionMismatch(format!(
                "stars have {} columns, embedding has {}",
                s.cols(),
                y0.cols()
            )));
        }
    }
    let mut extent = y0.max_abs();
    if let Some(s) = stars {
        extent = extent.max(s.max_abs());
    }
    if extent == 0.0 {
        return Ok((y0.clone(), stars.cloned()));
    }
    let f = target_extent / extent;
    Ok((y0.scaled(f)?, stars.map(|s| s.scaled(f)).transpose()?))
}

fn column_means(x: &DataMatrix) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, &v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

/// Orient a component so its largest-magnitude entry (first on ties) is
/// nonnegative.
fn fix_sign(row: &mut [f64]) {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = c;
        }
    }
    if row[best] < 0.0 {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
}

/// Exact path: eigendecomposition of the D×D sample covariance
/// (divisor N−1). Equivalent to an SVD of the centered matrix and
/// cheaper whenever D ≪ N.
fn fit_exact(x: &DataMatrix, mean: &[f64], q: usize) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    // Partial sums per fixed-size chunk, combined in chunk order, keep
    // the result independent of thread scheduling.
    let chunk_rows = n.div_ceil(8).max(1);
    let partials: Vec<Vec<f64>> = x
        .data()
        .par_chunks(chunk_rows * d)
        .map(|rows| {
            let mut acc = vec![0.0; d * d];
            let mut centered = vec![0.0; d];
            for row in rows.chunks_exact(d) {
                for c in 0..d {
                    centered[c] = row[c] - mean[c];
                }
                for p in 0..d {
                    let cp = centered[p];
                    for r in p..d {
                        acc[p * d + r] += cp * centered[r];
                    }
                }
            }
            acc
        })
        .collect();
    let mut cov = vec![0.0; d * d];
    for part in partials {
        for (c, v) in cov.iter_mut().zip(part) {
            *c += v;
        }
    }
    let denom = (n - 1) as f64;
    for p in 0..d {
        for r in p..d {
            let v = cov[p * d + r] / denom;
            cov[p * d + r] = v;
            cov[r * d + p] = v;
        }
    }

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &cov));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let mut comp = vec![0.0; q * d];
    let mut ev = vec![0.0; q];
    for (p, &src) in order.iter().take(q).enumerate() {
        ev[p] = eig.eigenvalues[src];
        for c in 0..d {
            comp[p * d + c] = eig.eigenvectors[(c, src)];
        }
    }
    (comp, ev)
}

/// Randomized path: Gaussian sketch plus subspace iteration on the
/// implicitly centered matrix (the centered data is never materialized),
/// then an exact SVD of the small projected block.
fn fit_randomized(x: &DataMatrix, mean: &[f64], q: usize) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    let s = (q + OVERSAMPLE).min(n).min(d);
    let mut rng = Rng::derive(SKETCH_SEED, 0);
    let omega: Vec<f64> = (0..d * s).map(|_| rng.next_normal()).collect();

    let mut z = mul_centered(x, mean, &omega, s);
    for _ in 0..POWER_ITERATIONS {
        let qn = orthonormalize(n, s, &z);
        let w = mul_centered_t(x, mean, &qn, s);
        let qd = orthonormalize(d, s, &w);
        z = mul_centered(x, mean, &qd, s);
    }
    let qn = orthonormalize(n, s, &z);
    // bt = Xcᵀ·Q has the principal directions as its left singular
    // vectors; its singular values are those of the centered data.
    let bt = mul_centered_t(x, mean, &qn, s);
    let svd = SVD::new(DMatrix::from_row_slice(d, s, &bt), true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
            .then(a.cmp(&b))
    });
    let denom = (n - 1) as f64;
    let mut comp = vec![0.0; q * d];
    let mut ev = vec![0.0; q];
    for (p, &src) in order.iter().take(q).enumerate() {
        let sv = svd.singular_values[src];
        ev[p] = sv * sv / denom;
        for c in 0..d {
            comp[p * d + c] = u[(c, src)];
        }
    }
    (comp, ev)
}

/// `(X - 1·meanᵀ) · M` for a d×s row-major `M`, without materializing the
/// centered matrix. Rows are independent, so this parallelizes cleanly.
fn mul_centered(x: &DataMatrix, mean: &[f64], m: &[f64], s: usize) -> Vec<f64> {
    let d = x.cols();
    x.data()
        .par_chunks(d)
        .flat_map_iter(|row| {
            (0..s).map(move |t| {
                let mut acc = 0.0;
                for c in 0..d {
                    acc += (row[c] - mean[c]) * m[c * s + t];
                }
                acc
            })
        })
        .collect()
}

/// `(X - 1·meanᵀ)ᵀ · Z` for an n×s row-major `Z`, accumulated over fixed
/// row chunks and combined in chunk order for determinism.
fn mul_centered_t(x: &DataMatrix, mean: &[f64], z: &[f64], s: usize) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let chunk_rows = n.div_ceil(8).max(1);
    let partials: Vec<Vec<f64>> = x
        .data()
        .par_chunks(chunk_rows * d)
        .enumerate()
        .map(|(chunk_idx, rows)| {
            let row0 = chunk_idx * chunk_rows;
            let mut acc = vec![0.0; d * s];
            for (r, row) in rows.chunks_exact(d).enumerate() {
                let zrow = &z[(row0 + r) * s..(row0 + r + 1) * s];
                for c in 0..d {
                    let xc = row[c] - mean[c];
                    let out = &mut acc[c * s..(c + 1) * s];
                    for (o, &zv) in out.iter_mut().zip(zrow) {
                        *o += xc * zv;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; d * s];
    for part in partials {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    out
}

/// Thin-QR orthonormal basis of a rows×cols row-major block (rows >= cols).
fn orthonormalize(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    let q = DMatrix::from_row_slice(rows, cols, data).qr().q();
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = q[(r, c)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = Rng::new(seed);
        DataMatrix::new(n, d, (0..n * d).map(|_| rng.next_normal()).collect()).unwrap()
    }

    #[test]
    fn line_data_gives_diagonal_component() {
        let x = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ])
        .unwrap();
        let model = fit_pca(&x, 2).unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components.get(0, 0) - inv_sqrt2).abs() < 1e-12);
        assert!((model.components.get(0, 1) - inv_sqrt2).abs() < 1e-12);
        assert!(model.explained_variance[0] > 0.0);
        assert!(model.explained_variance[1] <= 1e-12, "rank-1 data");
    }

    #[test]
    fn matches_closed_form_two_by_two_eigendecomposition() {
        // Anisotropic sample: sd 3 on axis 0, sd 1 on axis 1.
        let mut rng = Rng::new(42);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![3.0 * rng.next_normal(), rng.next_normal()])
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let model = fit_pca(&x, 2).unwrap();

        // Independent oracle: sample covariance entries by hand, then the
        // quadratic-formula eigenpairs of [[a, b], [b, c]].
        let n = rows.len() as f64;
        let (mut m0, mut m1) = (0.0, 0.0);
        for r in &rows {
            m0 += r[0];
            m1 += r[1];
        }
        m0 /= n;
        m1 /= n;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for r in &rows {
            a += (r[0] - m0) * (r[0] - m0);
            b += (r[0] - m0) * (r[1] - m1);
            c += (r[1] - m1) * (r[1] - m1);
        }
        a /= n - 1.0;
        b /= n - 1.0;
        c /= n - 1.0;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        let l1 = 0.5 * (a + c + disc);
        let l2 = 0.5 * (a + c - disc);
        let norm = ((l1 - c) * (l1 - c) + b * b).sqrt();
        let v1 = [(l1 - c) / norm, b / norm];

        assert!((model.explained_variance[0] - l1).abs() / l1 < 1e-8);
        assert!((model.explained_variance[1] - l2).abs() / l2 < 1e-8);
        let dot = model.components.get(0, 0) * v1[0] + model.components.get(0, 1) * v1[1];
        assert!(dot.abs() > 1.0 - 1e-10, "first component, |dot| = {}", dot.abs());
        // First component points along axis 0 for this sample.
        assert!(model.components.get(0, 0).abs() > 0.99);
    }

    #[test]
    fn full_rank_projection_reconstructs_centered_data() {
        let x = random_matrix(30, 6, 7);
        let model = fit_pca(&x, 6).unwrap();
        let t = model.transform(&x).unwrap();
        for r in 0..30 {
            for c in 0..6 {
                let mut rec = 0.0;
                for p in 0..6 {
                    rec += t.get(r, p) * model.components.get(p, c);
                }
                let expect = x.get(r, c) - model.mean[c];
                assert!((rec - expect).abs() <= 1e-8, "({r}, {c})");
            }
        }
    }

    #[test]
    fn transform_of_mean_row_is_zero() {
        let x = random_matrix(40, 3, 11);
        let model = fit_pca(&x, 3).unwrap();
        let m = DataMatrix::new(1, 3, model.mean.clone()).unwrap();
        let t = model.transform(&m).unwrap();
        for c in 0..3 {
            assert!(t.get(0, c).abs() <= 1e-12);
        }
    }

    #[test]
    fn line_transform_is_signed_distance_along_line() {
        let x = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
        ])
        .unwrap();
        let model = fit_pca(&x, 1).unwrap();
        let t = model.transform(&x).unwrap();
        // Points sit at arc length sqrt(2)·t from the origin; the mean is
        // at t = 1.5.
        for (r, tc) in [0.0f64, 1.0, 2.0, 3.0].iter().enumerate() {
            let expect = std::f64::consts::SQRT_2 * (tc - 1.5);
            assert!((t.get(r, 0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_matches_naive_matmul_oracle() {
        let x = random_matrix(25, 4, 3);
        let model = fit_pca(&x, 3).unwrap();
        let m = random_matrix(10, 4, 5);
        let t = model.transform(&m).unwrap();
        for r in 0..10 {
            for p in 0..3 {
                let mut acc = 0.0;
                for c in 0..4 {
                    acc += (m.get(r, c) - model.mean[c]) * model.components.get(p, c);
                }
                assert!((t.get(r, p) - acc).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn components_orthonormal_and_variances_ordered() {
        let x = random_matrix(200, 5, 17);
        let model = fit_pca(&x, 5).unwrap();
        for p in 0..5 {
            for r in 0..5 {
                let mut dot = 0.0;
                for c in 0..5 {
                    dot += model.components.get(p, c) * model.components.get(r, c);
                }
                let expect = if p == r { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() <= 1e-8, "({p}, {r}) dot = {dot}");
            }
        }
        let ev = &model.explained_variance;
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        assert!(ev.iter().all(|&v| v >= 0.0));

        // Projected per-axis sample variance equals the reported values.
        let t = model.transform(&x).unwrap();
        for (p, &expected) in ev.iter().enumerate().take(5) {
            let mean: f64 = (0..200).map(|r| t.get(r, p)).sum::<f64>() / 200.0;
            let var: f64 =
                (0..200).map(|r| (t.get(r, p) - mean).powi(2)).sum::<f64>() / 199.0;
            assert!((var - expected).abs() / expected <= 1e-8, "axis {p}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let x = random_matrix(60, 4, 23);
        let a = fit_pca(&x, 3).unwrap();
        let b = fit_pca(&x, 3).unwrap();
        assert_eq!(a.components.data(), b.components.data());
        assert_eq!(a.explained_variance, b.explained_variance);
        assert_eq!(a.mean, b.mean);
    }

    #[test]
    fn constant_data_has_zero_variance_but_defined_basis() {
        let x = DataMatrix::from_rows(&vec![vec![2.0, -1.0]; 5]).unwrap();
        let model = fit_pca(&x, 2).unwrap();
        assert_eq!(model.explained_variance, vec![0.0, 0.0]);
        let t = model.transform(&x).unwrap();
        assert!(t.data().iter().all(|&v| v.abs() <= 1e-12));
    }

    #[test]
    fn joint_embed_maps_duplicate_rows_identically() {
        let x = random_matrix(20, 3, 31);
        let a = DataMatrix::new(4, 3, x.data()[..12].to_vec()).unwrap();
        let (y0, s) = joint_embed(&x, &a, 2).unwrap();
        for r in 0..4 {
            assert_eq!(y0.row(r), s.row(r), "duplicate row {r}");
        }
    }

    #[test]
    fn joint_embed_mean_anchor_lands_at_origin() {
        let x = random_matrix(1000, 3, 37);
        let mean = column_means(&x);
        let a = DataMatrix::new(1, 3, mean).unwrap();
        let (_, s) = joint_embed(&x, &a, 2).unwrap();
        // The anchor equals the stacked mean, so it projects to zero.
        assert!(s.get(0, 0).abs() <= 1e-9);
        assert!(s.get(0, 1).abs() <= 1e-9);
    }

    #[test]
    fn joint_embed_matches_fit_then_transform() {
        let x = random_matrix(100, 4, 41);
        let a = random_matrix(4, 4, 43);
        let (y0, s) = joint_embed(&x, &a, 2).unwrap();
        let stacked = x.vstack(&a).unwrap();
        let model = fit_pca(&stacked, 2).unwrap();
        let tx = model.transform(&x).unwrap();
        let ta = model.transform(&a).unwrap();
        assert_eq!(y0.data(), tx.data());
        assert_eq!(s.data(), ta.data());
    }

    #[test]
    fn rescale_halves_when_extent_doubles_target() {
        let y0 = DataMatrix::from_rows(&[vec![20.0, -4.0], vec![1.0, 2.0]]).unwrap();
        let s = DataMatrix::from_rows(&[vec![-6.0, 8.0]]).unwrap();
        let (y1, s1) = rescale_init(&y0, Some(&s), 10.0).unwrap();
        let s1 = s1.unwrap();
        for (a, b) in y1.data().iter().zip(y0.data()) {
            assert_eq!(*a, b * 0.5);
        }
        for (a, b) in s1.data().iter().zip(s.data()) {
            assert_eq!(*a, b * 0.5);
        }
    }

    #[test]
    fn rescale_identity_when_extent_matches() {
        let y0 = DataMatrix::from_rows(&[vec![10.0, -3.0], vec![0.5, 2.0]]).unwrap();
        let (y1, _) = rescale_init(&y0, None, 10.0).unwrap();
        assert_eq!(y1.data(), y0.data());
    }

    #[test]
    fn rescale_preserves_pairwise_distance_ratios() {
        let y0 = random_matrix(15, 2, 47);
        let s = random_matrix(3, 2, 53);
        let (y1, s1) = rescale_init(&y0, Some(&s), 10.0).unwrap();
        let s1 = s1.unwrap();
        let dist =
            |m: &DataMatrix, i: usize, j: usize| crate::dist::euclidean_distance(m.row(i), m.row(j)).unwrap();
        let base = dist(&y0, 0, 1);
        let base_after = dist(&y1, 0, 1);
        for i in 0..15 {
            for j in (i + 1)..15 {
                let ratio = dist(&y0, i, j) / base;
                let ratio_after = dist(&y1, i, j) / base_after;
                assert!((ratio - ratio_after).abs() <= 1e-12);
            }
        }
        // Star-to-point offsets share the same factor.
        let off_before = y0.get(0, 0) - s.get(0, 0);
        let off_after = y1.get(0, 0) - s1.get(0, 0);
        assert!((off_after / off_before - base_after / base).abs() <= 1e-12);
    }

    #[test]
    fn rescale_skips_all_zero_input() {
        let y0 = DataMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        let (y1, _) = rescale_init(&y0, None, 10.0).unwrap();
        assert_eq!(y1.data(), y0.data());
    }

    #[test]
    fn randomized_path_recovers_low_rank_structure() {
        // Rank-3 data in 2100 columns forces the sketching solver.
        let n = 40;
        let d = RANDOMIZED_DIM_THRESHOLD + 100;
        let mut rng = Rng::new(61);
        let g: Vec<f64> = (0..n * 3).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..3 * d).map(|_| rng.next_normal()).collect();
        let mut data = vec![0.0; n * d];
        for r in 0..n {
            for k in 0..3 {
                let grk = g[r * 3 + k];
                for c in 0..d {
                    data[r * d + c] += grk * b[k * d + c];
                }
            }
        }
        let x = DataMatrix::new(n, d, data).unwrap();
        let model = fit_pca(&x, 3).unwrap();
        assert!(model.explained_variance[2] > 0.0);
        // Orthonormal basis...
        for p in 0..3 {
            for r in p..3 {
                let mut dot = 0.0;
                for c in 0..d {
                    dot += model.components.get(p, c) * model.components.get(r, c);
                }
                let expect = if p == r { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() <= 1e-8);
            }
        }
        // ...that reconstructs the centered data: the data is exactly
        // rank 3, so 3 components capture it.
        let t = model.transform(&x).unwrap();
        let mean = column_means(&x);
        for r in 0..n {
            for c in (0..d).step_by(97) {
                let mut rec = 0.0;
                for p in 0..3 {
                    rec += t.get(r, p) * model.components.get(p, c);
                }
                let expect = x.get(r, c) - mean[c];
                assert!((rec - expect).abs() <= 1e-6, "({r}, {c})");
            }
        }
    }

    #[test]
    fn randomized_agrees_with_exact_on_shared_instance() {
        // Drive both solvers over the same matrix; the spectrum decays
        // fast enough that the sketch recovers the leading directions.
        let n = 200;
        let d = 30;
        let mut rng = Rng::new(67);
        let mut data = vec![0.0; n * d];
        for r in 0..n {
            for c in 0..d {
                let scale = 4.0 / (1.0 + c as f64);
                data[r * d + c] = scale * rng.next_normal();
            }
        }
        let x = DataMatrix::new(n, d, data).unwrap();
        let mean = column_means(&x);
        let (ce, ve) = fit_exact(&x, &mean, 4);
        let (cr, vr) = fit_randomized(&x, &mean, 4);
        for p in 0..4 {
            assert!((ve[p] - vr[p]).abs() / ve[p] <= 1e-6, "variance {p}");
            let mut dot = 0.0;
            for c in 0..d {
                dot += ce[p * d + c] * cr[p * d + c];
            }
            assert!(dot.abs() >= 1.0 - 1e-6, "component {p}, |dot| = {}", dot.abs());
        }
    }

    #[test]
    fn fit_rejects_bad_arguments() {
        let x = random_matrix(10, 4, 71);
        assert!(fit_pca(&x, 0).is_err());
        assert!(fit_pca(&x, 5).is_err());
        let one = random_matrix(1, 4, 71);
        assert!(fit_pca(&one, 1).is_err());

        let model = fit_pca(&x, 2).unwrap();
        let wrong = random_matrix(3, 5, 73);
        assert!(model.transform(&wrong).is_err());
    }
}
