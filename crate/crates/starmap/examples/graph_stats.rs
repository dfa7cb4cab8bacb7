//! Look inside the fuzzy neighbor graph: per-point calibration results
//! (cutoff rho, bandwidth sigma), the weight and degree distributions,
//! and a CSV dump of the edge list (head printed, full list written to
//! `graph_stats_out/edges.csv`).

use std::fs;
use std::path::Path;

use starmap::{build_fuzzy_graph, synth_hierarchy};

fn summary(name: &str, values: &[f64]) {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
    }
    println!(
        "{name:>9}: min {lo:.5}  mean {:.5}  max {hi:.5}",
        sum / values.len() as f64
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_hierarchy(0);
    let k = 20;
    let graph = build_fuzzy_graph(&data.x, k)?;

    println!(
        "{} points, k = {k}: {} undirected edges (max possible {})",
        graph.n(),
        graph.edges().len(),
        graph.n() * k
    );
    summary("rho", graph.rho());
    summary("sigma", graph.sigma());
    summary("degree", graph.degree());
    println!("max edge weight: {}", graph.max_weight());

    // Weight histogram over (0, 1] in ten bins.
    let mut bins = [0usize; 10];
    for e in graph.edges() {
        bins[((e.w * 10.0).ceil() as usize).clamp(1, 10) - 1] += 1;
    }
    println!("weight histogram:");
    for (i, count) in bins.iter().enumerate() {
        println!(
            "  ({:.1}, {:.1}]: {count:>7} {}",
            i as f64 / 10.0,
            (i + 1) as f64 / 10.0,
            "#".repeat((count * 60).div_ceil(graph.edges().len().max(1)))
        );
    }

    let dir = Path::new("graph_stats_out");
    fs::create_dir_all(dir)?;
    let mut dump = Vec::new();
    graph.write_edges_csv(&mut dump)?;
    let path = dir.join("edges.csv");
    fs::write(&path, &dump)?;
    let head: Vec<&str> = std::str::from_utf8(&dump)?.lines().take(6).collect();
    println!("first edges:\n  {}", head.join("\n  "));
    println!("full edge list: {}", path.display());
    Ok(())
}
