//! Stochastic optimization of the embedding.
//!
//! Three forces act on the low-dimensional points: attraction along
//! graph edges, repulsion from negative samples, and — in starmap mode —
//! attraction toward a fixed per-cluster star. Edges are sampled at a
//! frequency proportional to their weight (`epochs_per_sample =
//! max_w / w`), which absorbs the weight factor of the attraction force
//! and the degree factor of the star force in expectation; each sampled
//! force's scalar coefficient is clipped, the attraction and star pulls
//! are blended with `lambda`, and the endpoint positions move by
//! `lr * coefficient * displacement` with a linearly decaying `lr`.
//!
//! The module also carries a dense [`loss`] and [`full_gradient`] pair.
//! They are not used by the SGD loop; they exist so tests can check the
//! sampled forces against finite differences of the actual objective.
//!
//! Two execution modes: deterministic (single-threaded edge loop,
//! bit-reproducible) and parallel (Hogwild-style unsynchronized writes,
//! fast but only statistically reproducible).

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::dist::squared_distance_raw;
use crate::error::{Error, Result};
use crate::graph::FuzzyGraph;
use crate::matrix::DataMatrix;
use crate::rng::Rng;

/// Which update rule drives the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Neighbor attraction blended with a pull toward fixed stars.
    Starmap,
    /// Plain neighbor embedding, no stars.
    Umap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Starmap => "starmap",
            Method::Umap => "umap",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "starmap" => Ok(Method::Starmap),
            "umap" => Ok(Method::Umap),
            other => Err(Error::InvalidInput(format!(
                "unknown method '{other}' (expected starmap or umap)"
            ))),
        }
    }
}

/// Everything the embedding run is parameterized by.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Similarity curve scale.
    pub a: f64,
    /// Similarity curve shape.
    pub b: f64,
    /// Star-attraction blend weight in [0, 1]; 0 recovers the plain
    /// update rule exactly.
    pub lambda: f64,
    /// Neighbors per point for the graph.
    pub k: usize,
    /// Embedding dimension.
    pub q: usize,
    /// Epoch count; `None` picks 500 for N <= 10_000 and 200 above.
    pub n_epochs: Option<usize>,
    /// Repulsion draws per positive sample. Zero disables repulsion.
    pub negative_sample_rate: usize,
    /// Learning rate at epoch 0; decays linearly to 0.
    pub initial_lr: f64,
    /// Bound on every sampled force coefficient.
    pub clip: f64,
    /// Distance floor for the singular coefficient factors.
    pub eps: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Hyperparams {
        Hyperparams {
            a: 1.577,
            b: 0.895,
            lambda: 0.1,
            k: 20,
            q: 2,
            n_epochs: None,
            negative_sample_rate: 5,
            initial_lr: 1.0,
            clip: 0.4,
            eps: 1e-3,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "a = {}, b = {} must be positive",
                self.a, self.b
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!(
                "lambda = {} outside [0, 1]",
                self.lambda
            )));
        }
        if self.k == 0 || self.q == 0 {
            return Err(Error::InvalidInput(format!(
                "k = {}, q = {} must be at least 1",
                self.k, self.q
            )));
        }
        let positive = |v: f64| v > 0.0; // NaN fails this too
        if !positive(self.initial_lr) || !positive(self.clip) || !positive(self.eps) {
            return Err(Error::InvalidInput(format!(
                "initial_lr = {}, clip = {}, eps = {} must be positive",
                self.initial_lr, self.clip, self.eps
            )));
        }
        Ok(())
    }

    /// Resolve the epoch count for a dataset of `n` points.
    pub fn epochs_for(&self, n: usize) -> usize {
        self.n_epochs
            .unwrap_or(if n <= 10_000 { 500 } else { 200 })
    }
}

/// Fixed star positions plus the point-to-star assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct StarState {
    pub s: DataMatrix,
    pub assignment: Vec<usize>,
}

/// The mutable optimization state: point positions, optional stars, and
/// how many epochs have been run. Stars never move.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    pub y: DataMatrix,
    pub stars: Option<StarState>,
    pub epoch: usize,
}

impl EmbeddingState {
    pub fn new(y: DataMatrix) -> EmbeddingState {
        EmbeddingState {
            y,
            stars: None,
            epoch: 0,
        }
    }

    pub fn with_stars(y: DataMatrix, s: DataMatrix, assignment: Vec<usize>) -> Result<EmbeddingState> {
        if s.cols() != y.cols() {
            return Err(Error::DimensionMismatch(format!(
                "stars have {} columns, embedding has {}",
                s.cols(),
                y.cols()
            )));
        }
        if assignment.len() != y.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} assignments for {} points",
                assignment.len(),
                y.rows()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= s.rows()) {
            return Err(Error::InvalidInput(format!(
                "assignment {bad} out of range for {} stars",
                s.rows()
            )));
        }
        Ok(EmbeddingState {
            y,
            stars: Some(StarState { s, assignment }),
            epoch: 0,
        })
    }
}

/// `1 / (1 + a d^{2b})` — similarity of two embedded points.
pub fn similarity(yi: &[f64], yj: &[f64], a: f64, b: f64) -> f64 {
    let d2 = squared_distance_raw(yi, yj);
    1.0 / (1.0 + a * d2.powf(b))
}

/// Scalar coefficient of the attraction force at squared distance `d2`:
/// `-2ab d^{2(b-1)} v w`. The `d^{2(b-1)}` factor is singular at zero for
/// b < 1, so it is evaluated at `max(d2, eps²)`; the similarity `v` uses
/// the raw distance.
pub fn attraction_coeff(d2: f64, w: f64, a: f64, b: f64, eps: f64) -> f64 {
    let v = 1.0 / (1.0 + a * d2.powf(b));
    -2.0 * a * b * d2.max(eps * eps).powf(b - 1.0) * v * w
}

/// Scalar coefficient of the repulsion force: `(2b / d²) v (1 - w)`,
/// with the denominator floored at `eps²`.
pub fn repulsion_coeff(d2: f64, w: f64, a: f64, b: f64, eps: f64) -> f64 {
    let v = 1.0 / (1.0 + a * d2.powf(b));
    (2.0 * b / d2.max(eps * eps)) * v * (1.0 - w)
}

/// Scalar coefficient of the star pull — the attraction curve evaluated
/// against the star, scaled by `degree` instead of an edge weight.
pub fn star_coeff(d2: f64, degree: f64, a: f64, b: f64, eps: f64) -> f64 {
    let v = 1.0 / (1.0 + a * d2.powf(b));
    -2.0 * a * b * d2.max(eps * eps).powf(b - 1.0) * v * degree
}

/// Single-pair attraction summand: a vector pointing from `yi` toward
/// `yj` (a negative multiple of `yi - yj`).
pub fn attraction_term(yi: &[f64], yj: &[f64], w: f64, a: f64, b: f64, eps: f64) -> Vec<f64> {
    let d2 = squared_distance_raw(yi, yj);
    let c = attraction_coeff(d2, w, a, b, eps);
    yi.iter().zip(yj).map(|(&p, &r)| c * (p - r)).collect()
}

/// Single-pair repulsion summand: a vector pointing away from `yj`.
/// Coincident points yield a zero vector here; the sampled loop breaks
/// that tie with a random direction instead.
pub fn repulsion_term(yi: &[f64], yj: &[f64], w: f64, a: f64, b: f64, eps: f64) -> Vec<f64> {
    let d2 = squared_distance_raw(yi, yj);
    let c = repulsion_coeff(d2, w, a, b, eps);
    yi.iter().zip(yj).map(|(&p, &r)| c * (p - r)).collect()
}

/// Star attraction on `yi` toward star `s`, scaled by node degree `d_i`.
pub fn star_term(yi: &[f64], s: &[f64], d_i: f64, a: f64, b: f64, eps: f64) -> Vec<f64> {
    let d2 = squared_distance_raw(yi, s);
    let c = star_coeff(d2, d_i, a, b, eps);
    yi.iter().zip(s).map(|(&p, &r)| c * (p - r)).collect()
}

/// Clamp a force coefficient into `[-clip, clip]`.
pub fn clip_coeff(c: f64, clip: f64) -> f64 {
    c.clamp(-clip, clip)
}

/// Dense cross-entropy objective over all ordered pairs `i != j`:
/// `-sum [w log v + (1 - w) log(1 - v)]`, `v` clamped into
/// `[1e-12, 1 - 1e-12]` before the logs. Test oracle; cost is O(N²).
pub fn loss(y: &DataMatrix, graph: &FuzzyGraph, params: &Hyperparams) -> f64 {
    let n = y.rows();
    let w = dense_weights(graph);
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = similarity(y.row(i), y.row(j), params.a, params.b)
                .clamp(1e-12, 1.0 - 1e-12);
            let wij = w[i * n + j];
            // Ordered pairs count (i, j) and (j, i); both contribute the
            // same term.
            total -= 2.0 * (wij * v.ln() + (1.0 - wij) * (1.0 - v).ln());
        }
    }
    total
}

/// Dense negative gradient of [`loss`]: per point, twice the sum of the
/// attraction and repulsion summands over all partners (twice because
/// each unordered pair appears in both orders in the objective). No
/// clipping, no sampling; meant for small test instances with no pair
/// closer than `eps`.
pub fn full_gradient(y: &DataMatrix, graph: &FuzzyGraph, params: &Hyperparams) -> DataMatrix {
    let (n, q) = (y.rows(), y.cols());
    let w = dense_weights(graph);
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut g = vec![0.0; q];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d2 = squared_distance_raw(y.row(i), y.row(j));
                let wij = w[i * n + j];
                let c = attraction_coeff(d2, wij, params.a, params.b, params.eps)
                    + repulsion_coeff(d2, wij, params.a, params.b, params.eps);
                for (t, gt) in g.iter_mut().enumerate() {
                    *gt += 2.0 * c * (y.get(i, t) - y.get(j, t));
                }
            }
            g
        })
        .collect();
    DataMatrix::new(n, q, data).expect("gradient of finite state is finite")
}

fn dense_weights(graph: &FuzzyGraph) -> Vec<f64> {
    let n = graph.n();
    let mut w = vec![0.0; n * n];
    for e in graph.edges() {
        w[e.i as usize * n + e.j as usize] = e.w;
        w[e.j as usize * n + e.i as usize] = e.w;
    }
    w
}

/// Per-epoch observer: completed epoch index, current coordinates
/// (row-major N×q).
pub type EpochCallback<'a> = Box<dyn FnMut(usize, &[f64]) + 'a>;

/// Progress callbacks for [`optimize_with_hooks`].
#[derive(Default)]
pub struct OptimizeHooks<'a> {
    /// Called after every epoch with the completed epoch index and the
    /// current coordinates (row-major N×q).
    pub on_epoch: Option<EpochCallback<'a>>,
    /// Periodic CSV dumps of the coordinates, e.g. for animations.
    pub snapshot: Option<SnapshotSpec>,
}

/// Write the embedding every `every` epochs to
/// `dir/{prefix}{epoch:05}.csv` with a `y0,y1,...` header.
#[derive(Debug, Clone)]
pub struct SnapshotSpec {
    pub every: usize,
    pub dir: PathBuf,
    pub prefix: String,
}

/// Run the sampled optimization for the configured number of epochs and
/// return the advanced state. See the module docs for the update rule.
///
/// `deterministic` selects the single-threaded bit-reproducible loop;
/// otherwise edges are processed in parallel with unsynchronized writes.
///
/// # Errors
/// Invalid hyperparameters, a state/graph mismatch, starmap mode without
/// stars, or a non-finite coordinate at an epoch boundary.
pub fn optimize(
    state: EmbeddingState,
    graph: &FuzzyGraph,
    params: &Hyperparams,
    mode: Method,
    deterministic: bool,
) -> Result<EmbeddingState> {
    optimize_with_hooks(state, graph, params, mode, deterministic, OptimizeHooks::default())
}

/// [`optimize`] with per-epoch callbacks and snapshot dumps.
pub fn optimize_with_hooks(
    mut state: EmbeddingState,
    graph: &FuzzyGraph,
    params: &Hyperparams,
    mode: Method,
    deterministic: bool,
    mut hooks: OptimizeHooks<'_>,
) -> Result<EmbeddingState> {
    params.validate()?;
    let n = state.y.rows();
    let q = state.y.cols();
    if graph.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph over {} points, embedding has {n}",
            graph.n()
        )));
    }
    if mode == Method::Starmap {
        let stars = state.stars.as_ref().ok_or_else(|| {
            Error::InvalidInput("starmap mode needs star positions and an assignment".into())
        })?;
        if stars.s.cols() != q || stars.assignment.len() != n {
            return Err(Error::DimensionMismatch(
                "star state does not match the embedding".into(),
            ));
        }
        if stars.assignment.iter().any(|&a| a >= stars.s.rows()) {
            return Err(Error::InvalidInput("assignment out of star range".into()));
        }
    }
    let n_epochs = params.epochs_for(n);
    if n_epochs == 0 {
        return Ok(state);
    }

    // Edge sampling schedule: an edge with weight w fires every
    // max_w / w epochs, so sample counts are proportional to weight.
    let max_w = graph.max_weight();
    let epochs_per_sample: Vec<f64> = graph.edges().iter().map(|e| max_w / e.w).collect();
    // Starting the counters at one full period (not zero) means weak
    // edges wait out their period before their first sample instead of
    // all firing in epoch 0.
    let mut next_sample = epochs_per_sample.clone();

    // Star pull only applies in starmap mode with a positive blend.
    let lambda = match mode {
        Method::Starmap => params.lambda,
        Method::Umap => 0.0,
    };
    let star = if lambda > 0.0 {
        state.stars.as_ref().map(|st| (st.s.data(), st.assignment.as_slice()))
    } else {
        None
    };

    let mut y = std::mem::take(state.y.data_mut());
    let run = if deterministic {
        run_deterministic(
            &mut y, q, graph, params, n_epochs, lambda, star, &epochs_per_sample, &mut next_sample,
            &mut hooks,
        )
    } else {
        run_parallel(
            &mut y, q, graph, params, n_epochs, lambda, star, &epochs_per_sample, &mut next_sample,
            &mut hooks,
        )
    };
    *state.y.data_mut() = y;
    run?;
    state.epoch += n_epochs;
    Ok(state)
}

/// One endpoint's displacement for a positive sample: blended attraction
/// toward the partner and pull toward the assigned star. Call once per
/// endpoint with `point`/`partner` swapped; both deltas are computed
/// from the pre-update positions and applied together.
#[allow(clippy::too_many_arguments)]
#[inline]
fn positive_delta(
    y: &[f64],
    q: usize,
    point: usize,
    partner: usize,
    c_att: f64,
    lambda: f64,
    star: Option<(&[f64], &[usize])>,
    params: &Hyperparams,
    lr: f64,
    delta: &mut [f64],
) {
    let pi = point * q;
    let pj = partner * q;
    if lambda > 0.0 {
        let (s, assignment) = star.expect("validated in starmap mode");
        let srow = &s[assignment[point] * q..(assignment[point] + 1) * q];
        let d2s = squared_distance_raw(&y[pi..pi + q], srow);
        // Degree factor 1 per sample: edge sampling already fires each
        // endpoint at a rate equal to its degree, which realizes the
        // degree scaling in expectation.
        let c_star = clip_coeff(star_coeff(d2s, 1.0, params.a, params.b, params.eps), params.clip);
        for t in 0..q {
            let diff = y[pi + t] - y[pj + t];
            delta[t] =
                lr * ((1.0 - lambda) * c_att * diff + lambda * c_star * (y[pi + t] - srow[t]));
        }
    } else {
        for t in 0..q {
            let diff = y[pi + t] - y[pj + t];
            delta[t] = lr * (c_att * diff);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_deterministic(
    y: &mut [f64],
    q: usize,
    graph: &FuzzyGraph,
    params: &Hyperparams,
    n_epochs: usize,
    lambda: f64,
    star: Option<(&[f64], &[usize])>,
    epochs_per_sample: &[f64],
    next_sample: &mut [f64],
    hooks: &mut OptimizeHooks<'_>,
) -> Result<()> {
    let n = y.len() / q;
    let edges = graph.edges();
    let mut rng = Rng::new(params.seed);
    let mut delta_i = vec![0.0; q];
    let mut delta_j = vec![0.0; q];
    for epoch in 0..n_epochs {
        let lr = params.initial_lr * (1.0 - epoch as f64 / n_epochs as f64);
        for (e, edge) in edges.iter().enumerate() {
            if next_sample[e] > epoch as f64 {
                continue;
            }
            next_sample[e] += epochs_per_sample[e];
            let (i, j) = (edge.i as usize, edge.j as usize);
            let d2 = squared_distance_raw(&y[i * q..(i + 1) * q], &y[j * q..(j + 1) * q]);
            // The edge weight is absorbed by the sampling frequency, so
            // the per-sample coefficient is evaluated at w = 1.
            let c_att = clip_coeff(
                attraction_coeff(d2, 1.0, params.a, params.b, params.eps),
                params.clip,
            );
            positive_delta(y, q, i, j, c_att, lambda, star, params, lr, &mut delta_i);
            positive_delta(y, q, j, i, c_att, lambda, star, params, lr, &mut delta_j);
            for t in 0..q {
                y[i * q + t] += delta_i[t];
            }
            for t in 0..q {
                y[j * q + t] += delta_j[t];
            }
            negative_samples(y, q, n, i, params, lr, &mut rng);
        }
        check_finite(y, epoch)?;
        if let Some(cb) = hooks.on_epoch.as_mut() {
            cb(epoch, y);
        }
        maybe_snapshot(hooks.snapshot.as_ref(), epoch, y, q)?;
    }
    Ok(())
}

/// Repulsion updates for `negative_sample_rate` uniform partners of
/// point `i`. Only `i` moves. A draw that lands on `i` itself is spent
/// but applies nothing; a coincident partner gets a random-direction
/// kick at the clip magnitude instead of an undefined one.
#[inline]
fn negative_samples(
    y: &mut [f64],
    q: usize,
    n: usize,
    i: usize,
    params: &Hyperparams,
    lr: f64,
    rng: &mut Rng,
) {
    for _ in 0..params.negative_sample_rate {
        let t = rng.next_index(n);
        if t == i {
            continue;
        }
        let d2 = squared_distance_raw(&y[i * q..(i + 1) * q], &y[t * q..(t + 1) * q]);
        if d2 == 0.0 {
            let dir = rng.unit_vector(q);
            for (c, dv) in dir.iter().enumerate() {
                y[i * q + c] += lr * params.clip * dv;
            }
            continue;
        }
        let c_rep = clip_coeff(
            repulsion_coeff(d2, 0.0, params.a, params.b, params.eps),
            params.clip,
        );
        for c in 0..q {
            let diff = y[i * q + c] - y[t * q + c];
            y[i * q + c] += lr * (c_rep * diff);
        }
    }
}

/// Hogwild loop: edges are split into fixed chunks, chunks run in
/// parallel with per-(epoch, chunk) derived rng streams, and writes to
/// the shared coordinates are unsynchronized relaxed atomics. Lost
/// updates under contention are accepted; the result is statistically
/// equivalent but not bit-reproducible.
#[allow(clippy::too_many_arguments)]
fn run_parallel(
    y: &mut [f64],
    q: usize,
    graph: &FuzzyGraph,
    params: &Hyperparams,
    n_epochs: usize,
    lambda: f64,
    star: Option<(&[f64], &[usize])>,
    epochs_per_sample: &[f64],
    next_sample: &mut [f64],
    hooks: &mut OptimizeHooks<'_>,
) -> Result<()> {
    const CHUNK: usize = 4096;
    let n = y.len() / q;
    let edges = graph.edges();
    let shared: Vec<AtomicU64> = y.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
    let mut scratch = vec![0.0; y.len()];
    for epoch in 0..n_epochs {
        let lr = params.initial_lr * (1.0 - epoch as f64 / n_epochs as f64);
        next_sample
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk_idx, schedule)| {
                let base = chunk_idx * CHUNK;
                let mut rng =
                    Rng::derive(params.seed, ((epoch as u64) << 32) | chunk_idx as u64);
                let mut yi = vec![0.0; q];
                let mut yj = vec![0.0; q];
                let mut delta = vec![0.0; q];
                for (off, next) in schedule.iter_mut().enumerate() {
                    if *next > epoch as f64 {
                        continue;
                    }
                    let e = base + off;
                    *next += epochs_per_sample[e];
                    let (i, j) = (edges[e].i as usize, edges[e].j as usize);
                    load_row(&shared, i, q, &mut yi);
                    load_row(&shared, j, q, &mut yj);
                    let d2 = squared_distance_raw(&yi, &yj);
                    let c_att = clip_coeff(
                        attraction_coeff(d2, 1.0, params.a, params.b, params.eps),
                        params.clip,
                    );
                    for (point, own, other) in [(i, &yi, &yj), (j, &yj, &yi)] {
                        if lambda > 0.0 {
                            let (s, assignment) = star.expect("validated");
                            let srow = &s[assignment[point] * q..(assignment[point] + 1) * q];
                            let d2s = squared_distance_raw(own, srow);
                            let c_star = clip_coeff(
                                star_coeff(d2s, 1.0, params.a, params.b, params.eps),
                                params.clip,
                            );
                            for t in 0..q {
                                delta[t] = lr
                                    * ((1.0 - lambda) * c_att * (own[t] - other[t])
                                        + lambda * c_star * (own[t] - srow[t]));
                            }
                        } else {
                            for t in 0..q {
                                delta[t] = lr * (c_att * (own[t] - other[t]));
                            }
                        }
                        add_row(&shared, point, q, &delta);
                    }
                    // Negative samples for endpoint i against the live
                    // coordinates.
                    for _ in 0..params.negative_sample_rate {
                        let t = rng.next_index(n);
                        if t == i {
                            continue;
                        }
                        load_row(&shared, i, q, &mut yi);
                        load_row(&shared, t, q, &mut yj);
                        let d2 = squared_distance_raw(&yi, &yj);
                        if d2 == 0.0 {
                            let dir = rng.unit_vector(q);
                            for (c, dv) in dir.iter().enumerate() {
                                delta[c] = lr * params.clip * dv;
                            }
                        } else {
                            let c_rep = clip_coeff(
                                repulsion_coeff(d2, 0.0, params.a, params.b, params.eps),
                                params.clip,
                            );
                            for c in 0..q {
                                delta[c] = lr * (c_rep * (yi[c] - yj[c]));
                            }
                        }
                        add_row(&shared, i, q, &delta);
                    }
                }
            });
        for (dst, src) in scratch.iter_mut().zip(&shared) {
            *dst = f64::from_bits(src.load(Ordering::Relaxed));
        }
        check_finite(&scratch, epoch)?;
        if let Some(cb) = hooks.on_epoch.as_mut() {
            cb(epoch, &scratch);
        }
        maybe_snapshot(hooks.snapshot.as_ref(), epoch, &scratch, q)?;
    }
    y.copy_from_slice(&scratch);
    Ok(())
}

#[inline]
fn load_row(shared: &[AtomicU64], row: usize, q: usize, out: &mut [f64]) {
    for (t, o) in out.iter_mut().enumerate() {
        *o = f64::from_bits(shared[row * q + t].load(Ordering::Relaxed));
    }
}

#[inline]
fn add_row(shared: &[AtomicU64], row: usize, q: usize, delta: &[f64]) {
    for (t, &d) in delta.iter().enumerate() {
        let cell = &shared[row * q + t];
        let old = f64::from_bits(cell.load(Ordering::Relaxed));
        cell.store((old + d).to_bits(), Ordering::Relaxed);
    }
}

fn check_finite(y: &[f64], epoch: usize) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { epoch })
    }
}

fn maybe_snapshot(spec: Option<&SnapshotSpec>, epoch: usize, y: &[f64], q: usize) -> Result<()> {
    let Some(spec) = spec else {
        return Ok(());
    };
    if spec.every == 0 || !(epoch + 1).is_multiple_of(spec.every) {
        return Ok(());
    }
    let path = spec.dir.join(format!("{}{:05}.csv", spec.prefix, epoch + 1));
    let file = File::create(&path).map_err(|e| Error::io(path.clone(), e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        let header: Vec<String> = (0..q).map(|t| format!("y{t}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in y.chunks_exact(q) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
