//! The anchor count decides which scale of a hierarchy the layout
//! locks in: sweep it over the three level sizes of the benchmark
//! (5, 25, 75) and score each embedding against every label level.
//! Few anchors pin only the coarse geometry; more anchors make the
//! intermediate and fine levels separable too.

use starmap::{knn_accuracy, run, synth_hierarchy, AnchorCount, RunConfig};

fn main() -> starmap::Result<()> {
    let data = synth_hierarchy(0);
    println!(
        "{:>7}  {:>8}  {:>8}  {:>8}  {:>8}",
        "anchors", "level0", "level1", "level2", "dist corr"
    );
    for c in [5usize, 25, 75] {
        let cfg = RunConfig {
            anchors: AnchorCount::Count(c),
            seed: 1,
            ..RunConfig::default()
        };
        let out = run(&data, &cfg)?;
        let mut accuracy = Vec::new();
        for col in &data.labels {
            accuracy.push(knn_accuracy(&out.y, &col.values, 5)?);
        }
        let dc = out.report.as_ref().expect("labeled").distance_correlation;
        println!(
            "{c:>7}  {:>8.4}  {:>8.4}  {:>8.4}  {dc:>8.4}",
            accuracy[0], accuracy[1], accuracy[2]
        );
    }
    Ok(())
}
