//! Star-anchored neighbor embedding.
//!
//! This crate embeds high-dimensional point sets into the plane (or any
//! low dimension) with the usual attraction/repulsion scheme over a fuzzy
//! k-nearest-neighbor graph, and optionally anchors the layout globally:
//! k-means centroids of the input are projected with PCA alongside the
//! data, held fixed as "stars", and every point feels a degree-weighted
//! pull toward its assigned star. The star pull keeps coarse geometry in
//! place while the neighbor forces arrange fine structure, so hierarchies
//! stay readable at every scale. Setting the blend weight `lambda` to zero
//! recovers the plain baseline exactly.
//!
//! The library is the interface; start from the runnable examples:
//!
//! | capability | run |
//! |---|---|
//! | end-to-end embed of the bundled hierarchical dataset | `cargo run --release -p starmap --example hierarchy_tour` |
//! | star-anchored vs plain baseline, metric table | `cargo run --release -p starmap --example baseline_shootout` |
//! | embed any numeric CSV | `cargo run --release -p starmap --example embed_csv -- data.csv out/` |
//! | anchor-count sweep | `cargo run --release -p starmap --example anchor_sweep` |
//! | per-epoch callbacks and coordinate snapshots | `cargo run --release -p starmap --example epoch_snapshots` |
//! | neighbor-graph internals and edge dump | `cargo run --release -p starmap --example graph_stats` |
//! | render an embedding CSV to SVG | `cargo run --release -p starmap --example plot_embedding -- y.csv plot.svg` |
//!
//! A thin CLI wraps the same pipeline (`synth`, `embed`, `eval`, `plot`
//! subcommands); `cargo run --release -p starmap -- --help`.
//!
//! Typical library use:
//!
//! ```no_run
//! use starmap::{synth_hierarchy, run, Method, RunConfig};
//!
//! let data = synth_hierarchy(0);
//! let mut cfg = RunConfig::default();
//! cfg.method = Method::Starmap;
//! cfg.hyperparams.n_epochs = Some(50); // default for this size is 500
//! let out = run(&data, &cfg).unwrap();
//! assert_eq!(out.y.rows(), data.x.rows());
//! assert!(out.stars.is_some());
//! ```

pub mod cli;
pub mod data;
pub mod dist;
pub mod error;
pub mod graph;
pub mod kmeans;
pub mod matrix;
pub mod metrics;
pub mod optim;
pub mod pca;
pub mod pipeline;
pub mod plot;
pub mod rng;

pub use data::{load_csv, save_embedding_csv, synth_hierarchy, ColumnId, LabelColumn, LabeledDataset};
pub use error::{Error, Result};
pub use graph::{build_fuzzy_graph, build_knn, FuzzyGraph, KnnIndex};
pub use kmeans::{cluster_anchors, heuristic_c, kmeans_fit, Anchors};
pub use matrix::DataMatrix;
pub use metrics::{distance_correlation, knn_accuracy, MetricReport};
pub use optim::{optimize, EmbeddingState, Hyperparams, Method};
pub use pca::{fit_pca, joint_embed, rescale_init, PcaModel};
pub use pipeline::{compare, run, AnchorCount, CompareRow, RunConfig, RunOutput, SeedPolicy};
pub use plot::{render_scatter_svg, PlotSpec};
pub use rng::Rng;
