//! Render an embedding CSV as an SVG scatter plot, optionally with a
//! star overlay, without going through the CLI. Expects the column
//! layout the library writes: `y0,y1[,label][,anchor]` and
//! `s0,s1,anchor_id` for stars.
//!
//! Usage:
//!   cargo run --release -p starmap --example plot_embedding -- Y.csv OUT.svg [STARS.csv]

use std::path::PathBuf;

use starmap::{load_csv, render_scatter_svg, ColumnId, PlotSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(embedding), Some(out)) = (args.next(), args.next()) else {
        eprintln!("usage: plot_embedding -- EMBEDDING.csv OUT.svg [STARS.csv]");
        std::process::exit(2);
    };
    let stars_path = args.next().map(PathBuf::from);

    let meta = [
        ColumnId::Name("label".into()),
        ColumnId::Name("anchor".into()),
    ];
    // Not every embedding file has both columns; retry with fewer.
    let data = (0..=meta.len())
        .rev()
        .find_map(|take| load_csv(PathBuf::from(&embedding).as_path(), true, &meta[..take]).ok())
        .ok_or("could not load the embedding CSV")?;

    let colors = data
        .labels
        .iter()
        .find(|c| c.name == "label")
        .map(|c| c.values.as_slice());
    let stars = match &stars_path {
        Some(path) => {
            Some(load_csv(path, true, &[ColumnId::Name("anchor_id".into())])?.x)
        }
        None => None,
    };

    let svg = render_scatter_svg(&data.x, colors, stars.as_ref(), &PlotSpec::default())?;
    std::fs::write(&out, svg)?;
    println!(
        "plotted {} points{} to {out}",
        data.n(),
        stars
            .as_ref()
            .map_or(String::new(), |s| format!(" and {} stars", s.rows())),
    );
    Ok(())
}
