//! Embed any numeric CSV. The file needs a header row; columns whose
//! names start with `label` or `anchor` are read as categorical
//! metadata, everything else as features. Writes `embedding.csv` (with
//! star companion file) and `embedding.svg` into the output directory.
//!
//! Usage:
//!   cargo run --release -p starmap --example embed_csv -- INPUT.csv OUT_DIR

use std::fs;
use std::io::BufRead;
use std::path::PathBuf;

use starmap::{
    load_csv, render_scatter_svg, run, save_embedding_csv, ColumnId, PlotSpec, RunConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(input), Some(out_dir)) = (args.next(), args.next()) else {
        eprintln!("usage: embed_csv -- INPUT.csv OUT_DIR");
        std::process::exit(2);
    };
    let input = PathBuf::from(input);
    let out_dir = PathBuf::from(out_dir);

    let header = std::io::BufReader::new(fs::File::open(&input)?)
        .lines()
        .next()
        .ok_or("empty input file")??;
    let label_cols: Vec<ColumnId> = header
        .split(',')
        .map(str::trim)
        .filter(|name| {
            let lower = name.to_ascii_lowercase();
            lower.starts_with("label") || lower.starts_with("anchor")
        })
        .map(|name| ColumnId::Name(name.to_string()))
        .collect();

    let data = load_csv(&input, true, &label_cols)?;
    println!(
        "loaded {} rows x {} features, {} label column(s)",
        data.n(),
        data.x.cols(),
        data.labels.len()
    );

    let cfg = RunConfig::default(); // star method, auto anchors, lambda 0.1, k 20
    let out = run(&data, &cfg)?;
    if let Some(report) = &out.report {
        println!(
            "knn accuracy {:.4}, distance correlation {:.4} ({:.2}s)",
            report.knn_accuracy, report.distance_correlation, report.elapsed_seconds
        );
    }

    fs::create_dir_all(&out_dir)?;
    let csv = out_dir.join("embedding.csv");
    save_embedding_csv(
        &csv,
        &out.y,
        data.finest_label(),
        out.stars.as_ref(),
        out.assignment.as_deref(),
    )?;
    let svg = out_dir.join("embedding.svg");
    let colors = data.finest_label().map(|c| c.values.as_slice());
    fs::write(
        &svg,
        render_scatter_svg(&out.y, colors, out.stars.as_ref(), &PlotSpec::default())?,
    )?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
