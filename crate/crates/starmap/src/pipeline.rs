//! End-to-end runs: graph construction, anchor selection, PCA
//! initialization, optimization, and scoring behind one entry point.
//!
//! `run` executes a single configuration; `compare` repeats a set of
//! configurations with varied seeds and aggregates mean and standard
//! deviation per metric. Every stage failure is tagged with the stage
//! name so callers can tell where a run died.

use std::time::Instant;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::graph::build_fuzzy_graph;
use crate::kmeans::{cluster_anchors, heuristic_c};
use crate::matrix::DataMatrix;
use crate::metrics::{
    distance_correlation, knn_accuracy, MetricReport, DEFAULT_KNN_K, DEFAULT_MAX_PAIRS,
};
use crate::optim::{optimize, EmbeddingState, Hyperparams, Method};
use crate::pca::{fit_pca, joint_embed, rescale_init};

/// Input dimension above which anchors are clustered in a PCA-reduced
/// space rather than the raw one.
pub const DEFAULT_PREREDUCE_THRESHOLD: usize = 50;
/// Half-width the initial layout is rescaled to before optimization.
pub const INIT_EXTENT: f64 = 10.0;

/// How many anchors to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorCount {
    /// `heuristic_c(N)`: one anchor per 500 points, clamped to [1, 100].
    Auto,
    Count(usize),
}

impl std::str::FromStr for AnchorCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AnchorCount::Auto);
        }
        s.parse::<usize>().map(AnchorCount::Count).map_err(|_| {
            Error::InvalidInput(format!("anchors must be a count or \"auto\", got {s:?}"))
        })
    }
}

/// Everything a single run needs besides the data.
///
/// `seed` is the master seed: per-stage seeds (anchors, optimizer,
/// metric sampling) derive from it, and it supersedes
/// `hyperparams.seed` inside [`run`].
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub hyperparams: Hyperparams,
    pub anchors: AnchorCount,
    pub prereduce_threshold: usize,
    pub deterministic: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Starmap,
            hyperparams: Hyperparams::default(),
            anchors: AnchorCount::Auto,
            prereduce_threshold: DEFAULT_PREREDUCE_THRESHOLD,
            deterministic: false,
            seed: 0,
        }
    }
}

/// The product of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub y: DataMatrix,
    /// Anchor positions in the embedding (star-attraction method only).
    pub stars: Option<DataMatrix>,
    /// Per-point anchor assignment (star-attraction method only).
    pub assignment: Option<Vec<usize>>,
    /// Metrics against the finest label column; `None` for unlabeled
    /// data. `elapsed_seconds` covers graph through optimization, not
    /// the metric computation itself.
    pub report: Option<MetricReport>,
}

const SEED_ANCHORS: u64 = 1;
const SEED_OPTIMIZER: u64 = 2;
const SEED_METRICS: u64 = 3;

fn stage_seed(master: u64, tag: u64) -> u64 {
    crate::rng::Rng::derive(master, tag).next_u64()
}

/// Embeds `x` according to `cfg`.
///
/// Stages run in order: neighbor graph; (star method only) anchor
/// clustering; PCA initialization (joint with anchors for the star
/// method, on the data alone otherwise); rescale to [`INIT_EXTENT`];
/// optimization; metrics when labels are present.
///
/// # Errors
/// `N < max(k + 1, anchor count)`, invalid hyperparameters, or any
/// stage failure (tagged with the stage name).
pub fn run(x: &LabeledDataset, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.hyperparams.validate()?;
    let n = x.n();
    let q = cfg.hyperparams.q;
    let c = match cfg.anchors {
        AnchorCount::Auto => heuristic_c(n),
        AnchorCount::Count(c) => c,
    };
    let min_n = if cfg.method == Method::Starmap {
        (cfg.hyperparams.k + 1).max(c)
    } else {
        cfg.hyperparams.k + 1
    };
    if n < min_n {
        return Err(Error::InvalidInput(format!(
            "need at least {min_n} rows for k = {} and {c} anchors, got {n}",
            cfg.hyperparams.k
        )));
    }

    let started = Instant::now();
    let graph = build_fuzzy_graph(&x.x, cfg.hyperparams.k).map_err(|e| e.in_stage("graph"))?;

    let state = match cfg.method {
        Method::Starmap => {
            let anchors = cluster_anchors(
                &x.x,
                c,
                cfg.prereduce_threshold,
                stage_seed(cfg.seed, SEED_ANCHORS),
            )
            .map_err(|e| e.in_stage("anchors"))?;
            let (y0, s0) = joint_embed(&x.x, &anchors.centers, q)
                .and_then(|(y0, s0)| {
                    let (y0, s0) = rescale_init(&y0, Some(&s0), INIT_EXTENT)?;
                    Ok((y0, s0.expect("stars passed in")))
                })
                .map_err(|e| e.in_stage("init"))?;
            EmbeddingState::with_stars(y0, s0, anchors.assignment)
                .map_err(|e| e.in_stage("init"))?
        }
        Method::Umap => {
            let y0 = fit_pca(&x.x, q)
                .and_then(|pca| pca.transform(&x.x))
                .and_then(|y0| Ok(rescale_init(&y0, None, INIT_EXTENT)?.0))
                .map_err(|e| e.in_stage("init"))?;
            EmbeddingState::new(y0)
        }
    };

    let mut params = cfg.hyperparams.clone();
    params.seed = stage_seed(cfg.seed, SEED_OPTIMIZER);
    let state = optimize(state, &graph, &params, cfg.method, cfg.deterministic)
        .map_err(|e| e.in_stage("optimize"))?;
    let elapsed = started.elapsed().as_secs_f64();

    let report = match x.finest_label() {
        Some(col) => {
            let acc = knn_accuracy(&state.y, &col.values, DEFAULT_KNN_K)
                .map_err(|e| e.in_stage("metrics"))?;
            let (r, n_pairs) = distance_correlation(
                &x.x,
                &state.y,
                DEFAULT_MAX_PAIRS,
                stage_seed(cfg.seed, SEED_METRICS),
            )
            .map_err(|e| e.in_stage("metrics"))?;
            Some(MetricReport {
                knn_accuracy: acc,
                distance_correlation: r,
                n_pairs_sampled: n_pairs,
                elapsed_seconds: elapsed,
            })
        }
        None => None,
    };

    let (stars, assignment) = match state.stars {
        Some(s) => (Some(s.s), Some(s.assignment)),
        None => (None, None),
    };
    Ok(RunOutput {
        y: state.y,
        stars,
        assignment,
        report,
    })
}

/// How `compare` varies seeds across repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    /// Repeat `r` of a config runs with `config.seed + r`.
    Derived,
    /// Every repeat reuses `config.seed` unchanged.
    Fixed,
}

/// One configuration's aggregated results.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub config: RunConfig,
    /// Reports of the successful repeats, in repeat order.
    pub reports: Vec<MetricReport>,
    /// `(repeat index, error message)` of the failed repeats.
    pub failures: Vec<(usize, String)>,
}

impl CompareRow {
    fn stats(&self, field: impl Fn(&MetricReport) -> f64) -> (f64, f64) {
        let n = self.reports.len();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.reports.iter().map(&field).sum::<f64>() / n as f64;
        if n == 1 {
            return (mean, 0.0);
        }
        let var = self
            .reports
            .iter()
            .map(|r| (field(r) - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        (mean, var.sqrt())
    }

    /// Mean and sample standard deviation of the kNN accuracy.
    pub fn knn_accuracy(&self) -> (f64, f64) {
        self.stats(|r| r.knn_accuracy)
    }

    /// Mean and sample standard deviation of the distance correlation.
    pub fn distance_correlation(&self) -> (f64, f64) {
        self.stats(|r| r.distance_correlation)
    }

    /// Mean wall-clock seconds per successful run.
    pub fn elapsed_seconds(&self) -> f64 {
        self.stats(|r| r.elapsed_seconds).0
    }
}

/// Runs every config `repeats` times and aggregates the metrics.
///
/// Individual run failures do not abort the comparison; they are
/// recorded per row and the survivors are averaged.
///
/// # Errors
/// `repeats == 0` or a dataset without labels (nothing to score).
pub fn compare(
    x: &LabeledDataset,
    configs: &[RunConfig],
    repeats: usize,
    seeds: SeedPolicy,
) -> Result<Vec<CompareRow>> {
    if repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }
    if x.labels.is_empty() {
        return Err(Error::InvalidInput(
            "comparison needs at least one label column".into(),
        ));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let mut row = CompareRow {
            config: config.clone(),
            reports: Vec::new(),
            failures: Vec::new(),
        };
        for repeat in 0..repeats {
            let mut cfg = config.clone();
            cfg.seed = match seeds {
                SeedPolicy::Derived => config.seed.wrapping_add(repeat as u64),
                SeedPolicy::Fixed => config.seed,
            };
            match run(x, &cfg) {
                Ok(out) => row
                    .reports
                    .push(out.report.expect("labels checked above")),
                Err(e) => row.failures.push((repeat, e.to_string())),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
