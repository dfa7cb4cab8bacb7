//! Star-anchored embedding vs the plain baseline on the hierarchical
//! benchmark: each configuration runs three times with derived seeds
//! and the table shows mean and spread per metric. The star method
//! should land a clearly higher distance correlation (global shape)
//! at comparable neighbor accuracy.

use starmap::{compare, synth_hierarchy, AnchorCount, Method, RunConfig, SeedPolicy};

fn main() -> starmap::Result<()> {
    let data = synth_hierarchy(0);
    let star = RunConfig {
        method: Method::Starmap,
        anchors: AnchorCount::Count(75),
        ..RunConfig::default()
    };
    let plain = RunConfig {
        method: Method::Umap,
        ..RunConfig::default()
    };

    let repeats = 3;
    println!(
        "running 2 configurations x {repeats} repeats on {} points ...",
        data.n ()
    );
    let rows = compare(&data, &[star, plain], repeats, SeedPolicy::Derived)?;

    println!(
        "{:>8}  {:>20}  {:>20}  {:>8}",
        "method", "knn accuracy", "distance corr", "sec/run"
    );
    for row in &rows {
        let (knn, knn_sd) = row.knn_accuracy();
        let (dc, dc_sd) = row.distance_correlation();
        println!(
            "{:>8}  {:>12.4} +-{:.4}  {:>12.4} +-{:.4}  {:>8.2}",
            row.config.method.to_string(),
            knn,
            knn_sd,
            dc,
            dc_sd,
            row.elapsed_seconds()
        );
        for (repeat, err) in &row.failures {
            eprintln!("  repeat {repeat} failed: {err}");
        }
    }
    Ok(())
}
