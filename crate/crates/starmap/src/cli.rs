//! Command-line front end: `synth`, `embed`, `eval`, and `plot`.
//!
//! Exit codes are a stable contract: 0 on success, 1 on runtime
//! failure (I/O, bad data, a failed stage), 2 on usage errors. The
//! `STARMAP_THREADS` environment variable caps the worker-thread count
//! (0 or unset picks the number of cores). Progress notes go to
//! stderr; only `eval` writes data (the report) to stdout.
//!
//! Input CSVs are expected to carry a header row. Columns whose names
//! start with `label` or `anchor` (case-insensitive) are treated as
//! categorical metadata; everything else is parsed as numeric features.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{
    load_csv, save_embedding_csv, save_labeled_csv, save_stars_csv, synth_hierarchy, ColumnId,
    LabelColumn, LabeledDataset,
};
use crate::error::{Error, Result};
use crate::metrics::{distance_correlation, knn_accuracy, MetricReport, DEFAULT_KNN_K,
    DEFAULT_MAX_PAIRS};
use crate::optim::Method;
use crate::pipeline::{self, AnchorCount, RunConfig};
use crate::plot::{render_scatter_svg, PlotSpec};

#[derive(Parser)]
#[command(
    name = "starmap",
    version,
    about = "Star-anchored neighbor embedding: synthesize, embed, evaluate, plot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the 7500-point hierarchical benchmark dataset as CSV.
    Synth(SynthArgs),
    /// Embed a CSV of features into 2-D and write the result as CSV.
    Embed(EmbedArgs),
    /// Score an embedding against the original features.
    Eval(EvalArgs),
    /// Render a 2-D embedding CSV as an SVG scatter plot.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Seed for the per-point noise (cluster layout is seed-independent).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Embedding method: starmap (star-anchored) or umap (plain).
    #[arg(long, default_value = "starmap")]
    method: Method,
    /// Anchor count, or "auto" for one per 500 points (clamped to 100).
    #[arg(long, default_value = "auto")]
    anchors: AnchorCount,
    /// Blend weight of the star pull against neighbor attraction.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Neighbors per point in the fuzzy graph.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Optimization epochs (default: 500 up to 10k points, 200 above).
    #[arg(long)]
    epochs: Option<usize>,
    /// Per-force coefficient clip.
    #[arg(long, default_value_t = 0.4)]
    clip: f64,
    /// Master seed for anchors, optimizer, and metric sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Single-threaded, bit-reproducible optimization.
    #[arg(long)]
    deterministic: bool,
    /// Output embedding CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Star coordinates CSV path (default: <out>.stars.csv).
    #[arg(long)]
    stars_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV of original features (label columns are excluded).
    #[arg(long)]
    original: PathBuf,
    /// CSV of embedding coordinates.
    #[arg(long)]
    embedding: PathBuf,
    /// Label column in the original file, by name or zero-based index
    /// (default: the last label* column).
    #[arg(long)]
    labels: Option<String>,
    /// Re-score this many times with distinct sampling seeds.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Emit the report as JSON (default).
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit the report as CSV rows.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV of 2-D embedding coordinates.
    #[arg(long)]
    embedding: PathBuf,
    /// Optional star coordinates CSV to overlay.
    #[arg(long)]
    stars: Option<PathBuf>,
    /// Column to color by, by name or zero-based index
    /// (default: the last label* column, if any).
    #[arg(long)]
    color_by: Option<String>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 800)]
    height: u32,
}

/// Parses `std::env::args` and runs the requested command.
pub fn run_from_args() -> ExitCode {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and exit 0; real usage
            // errors print to stderr and exit 2.
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("STARMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("STARMAP_THREADS must be a number, got {raw:?}"))?;
    if n > 0 {
        // A second initialization can only happen inside a test
        // harness; the pool is already in place then.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let data = synth_hierarchy(args.seed);
    save_labeled_csv(&args.out, &data)?;
    eprintln!("wrote {} rows to {}", data.n(), args.out.display());
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let data = load_labeled(&args.input)?;
    let mut cfg = RunConfig {
        method: args.method,
        anchors: args.anchors,
        deterministic: args.deterministic,
        seed: args.seed,
        ..RunConfig::default()
    };
    cfg.hyperparams.lambda = args.lambda;
    cfg.hyperparams.k = args.k;
    cfg.hyperparams.n_epochs = args.epochs;
    cfg.hyperparams.clip = args.clip;

    let out = pipeline::run(&data, &cfg)?;
    let label = data.finest_label();
    match (&out.stars, &args.stars_out) {
        (Some(stars), Some(path)) => {
            save_embedding_csv(&args.out, &out.y, label, None, out.assignment.as_deref())?;
            save_stars_csv(path, stars)?;
            eprintln!("wrote {} stars to {}", stars.rows(), path.display());
        }
        (Some(stars), None) => {
            save_embedding_csv(&args.out, &out.y, label, Some(stars), out.assignment.as_deref())?;
            eprintln!("wrote {} stars to {}.stars.csv", stars.rows(), args.out.display());
        }
        (None, maybe_path) => {
            if let Some(path) = maybe_path {
                eprintln!(
                    "warning: --stars-out {} ignored: method {} produces no stars",
                    path.display(),
                    args.method
                );
            }
            save_embedding_csv(&args.out, &out.y, label, None, None)?;
        }
    }
    eprintln!(
        "embedded {} points with {} to {}",
        out.y.rows(),
        args.method,
        args.out.display()
    );
    if let Some(report) = &out.report {
        eprintln!(
            "knn_accuracy {:.4}  distance_correlation {:.4}  ({:.2}s)",
            report.knn_accuracy, report.distance_correlation, report.elapsed_seconds
        );
    }
    Ok(())
}

/// Mean plus spread of repeated evaluations; the `_sd` keys exist only
/// in multi-repeat reports.
#[derive(Serialize)]
struct EvalSummary {
    knn_accuracy: f64,
    distance_correlation: f64,
    n_pairs_sampled: usize,
    elapsed_seconds: f64,
    knn_accuracy_sd: f64,
    distance_correlation_sd: f64,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    if args.repeats == 0 {
        return Err(Error::InvalidInput("--repeats must be at least 1".into()));
    }
    let original = load_labeled_with(&args.original, args.labels.as_deref())?;
    let embedding = load_labeled(&args.embedding)?;
    let label = pick_label(&original, args.labels.as_deref())?;

    let mut reports = Vec::with_capacity(args.repeats);
    for repeat in 0..args.repeats {
        let started = Instant::now();
        let acc = knn_accuracy(&embedding.x, &label.values, DEFAULT_KNN_K)?;
        let (r, n_pairs) =
            distance_correlation(&original.x, &embedding.x, DEFAULT_MAX_PAIRS, repeat as u64)?;
        reports.push(MetricReport {
            knn_accuracy: acc,
            distance_correlation: r,
            n_pairs_sampled: n_pairs,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });
    }

    if args.csv {
        let dataset = args
            .embedding
            .file_stem()
            .map_or_else(|| "embedding".into(), |s| s.to_string_lossy().into_owned());
        println!("method,dataset,seed,knn_accuracy,distance_correlation,elapsed_seconds");
        for (repeat, report) in reports.iter().enumerate() {
            println!(
                "eval,{dataset},{repeat},{},{},{}",
                report.knn_accuracy, report.distance_correlation, report.elapsed_seconds
            );
        }
    } else if args.repeats == 1 {
        println!("{}", serde_json::to_string_pretty(&reports[0]).expect("plain fields"));
    } else {
        let stats = |field: fn(&MetricReport) -> f64| {
            let n = reports.len() as f64;
            let mean = reports.iter().map(field).sum::<f64>() / n;
            let var = reports
                .iter()
                .map(|r| (field(r) - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            (mean, var.sqrt())
        };
        let (knn_mean, knn_sd) = stats(|r| r.knn_accuracy);
        let (dc_mean, dc_sd) = stats(|r| r.distance_correlation);
        let summary = EvalSummary {
            knn_accuracy: knn_mean,
            distance_correlation: dc_mean,
            n_pairs_sampled: reports[0].n_pairs_sampled,
            elapsed_seconds: stats(|r| r.elapsed_seconds).0,
            knn_accuracy_sd: knn_sd,
            distance_correlation_sd: dc_sd,
        };
        println!("{}", serde_json::to_string_pretty(&summary).expect("plain fields"));
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let embedding = load_labeled(&args.embedding)?;
    let colors: Option<&LabelColumn> = match &args.color_by {
        Some(spec) => Some(find_column(&embedding, spec)?),
        None => embedding
            .labels
            .iter()
            .rev()
            .find(|c| c.name.to_ascii_lowercase().starts_with("label")),
    };
    let stars = match &args.stars {
        Some(path) => Some(load_labeled(path)?.x),
        None => None,
    };
    let spec = PlotSpec {
        width: args.width,
        height: args.height,
        color_by: args.color_by.clone(),
        ..PlotSpec::default()
    };
    let svg = render_scatter_svg(
        &embedding.x,
        colors.map(|c| c.values.as_slice()),
        stars.as_ref(),
        &spec,
    )?;
    std::fs::write(&args.out, svg).map_err(|e| Error::io(&args.out, e))?;
    eprintln!(
        "plotted {} points to {}",
        embedding.x.rows(),
        args.out.display()
    );
    Ok(())
}

/// Header names of a CSV file.
fn csv_headers(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    Ok(reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect())
}

fn is_metadata_column(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.starts_with("label") || lower.starts_with("anchor")
}

/// Loads a CSV, routing label/anchor columns into metadata.
fn load_labeled(path: &Path) -> Result<LabeledDataset> {
    load_labeled_with(path, None)
}

/// Like [`load_labeled`], but also routes an explicitly requested
/// column (by name or zero-based index) into the metadata set.
fn load_labeled_with(path: &Path, extra: Option<&str>) -> Result<LabeledDataset> {
    let headers = csv_headers(path)?;
    let mut names: Vec<String> = headers
        .iter()
        .filter(|h| is_metadata_column(h))
        .cloned()
        .collect();
    if let Some(spec) = extra {
        let name = match spec.parse::<usize>() {
            Ok(idx) => headers
                .get(idx)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "column index {idx} out of range for {} columns",
                        headers.len()
                    ))
                })?
                .clone(),
            Err(_) => spec.to_string(),
        };
        if !names.contains(&name) {
            names.push(name);
        }
    }
    let cols: Vec<ColumnId> = names.into_iter().map(ColumnId::Name).collect();
    load_csv(path, true, &cols)
}

/// Resolves a `--labels`/`--color-by` selector against loaded metadata.
fn find_column<'a>(data: &'a LabeledDataset, spec: &str) -> Result<&'a LabelColumn> {
    let by_name = |name: &str| data.labels.iter().find(|c| c.name == name);
    let col = match spec.parse::<usize>() {
        Ok(_) => None, // resolved to a name at load time; fall through
        Err(_) => by_name(spec),
    };
    col.or_else(|| data.labels.last())
        .ok_or_else(|| Error::InvalidInput(format!("no label column matches {spec:?}")))
}

fn pick_label<'a>(data: &'a LabeledDataset, spec: Option<&str>) -> Result<&'a LabelColumn> {
    match spec {
        Some(spec) => find_column(data, spec),
        None => data.finest_label().ok_or_else(|| {
            Error::InvalidInput(
                "no label column found in the original file; pass --labels".into(),
            )
        }),
    }
}
