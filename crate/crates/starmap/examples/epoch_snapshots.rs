//! Watch the optimizer work: a per-epoch callback streams the layout
//! extent, and the snapshot hook dumps coordinate frames on a fixed
//! schedule into `epoch_snapshots_out/` (ready to be rendered into an
//! animation). Demonstrates driving the optimizer directly instead of
//! through the pipeline.

use std::path::PathBuf;

use starmap::optim::{optimize_with_hooks, OptimizeHooks, SnapshotSpec};
use starmap::{
    build_fuzzy_graph, fit_pca, rescale_init, DataMatrix, EmbeddingState, Hyperparams, Method, Rng,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Four well-separated Gaussian blobs, 75 points each.
    let mut rng = Rng::new(42);
    let centers = [(0.0, 0.0), (12.0, 0.0), (0.0, 12.0), (12.0, 12.0)];
    let mut rows = Vec::new();
    for (cx, cy) in centers {
        for _ in 0..75 {
            rows.push(vec![cx + rng.next_normal(), cy + rng.next_normal()]);
        }
    }
    let x = DataMatrix::from_rows(&rows)?;

    let graph = build_fuzzy_graph(&x, 10)?;
    let pca = fit_pca(&x, 2)?;
    let (y0, _) = rescale_init(&pca.transform(&x)?, None, 10.0)?;

    let params = Hyperparams {
        k: 10,
        n_epochs: Some(200),
        seed: 7,
        ..Hyperparams::default()
    };

    let dir = PathBuf::from("epoch_snapshots_out");
    std::fs::create_dir_all(&dir)?;
    let hooks = OptimizeHooks {
        on_epoch: Some(Box::new(|epoch: usize, coords: &[f64]| {
            if (epoch + 1).is_multiple_of(25) {
                let extent = coords.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                println!("epoch {:>3}: layout extent {extent:.3}", epoch + 1);
            }
        })),
        snapshot: Some(SnapshotSpec {
            every: 50,
            dir: dir.clone(),
            prefix: "frame_".into(),
        }),
    };

    let state = optimize_with_hooks(
        EmbeddingState::new(y0),
        &graph,
        &params,
        Method::Umap,
        true, // deterministic, so reruns write identical frames
        hooks,
    )?;
    println!("finished after {} epochs", state.epoch);

    let mut frames: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    frames.sort();
    println!("snapshot frames in {}: {}", dir.display(), frames.join(", "));
    Ok(())
}
