//! Datasets: synthetic hierarchy generation and CSV input/output.
//!
//! The synthetic generator lays out a three-level cluster hierarchy in
//! the plane (5 coarse groups, 5 intermediate groups each, 3 fine
//! groups each, 100 points per fine group = 7500 points) so that
//! embeddings can be scored against known structure at every scale.
//! CSV loading factorizes chosen label columns into dense class ids;
//! CSV saving uses `f64`'s shortest round-trip formatting, so
//! write-then-read reproduces coordinates bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::Rng;

const N_LARGE: usize = 5;
const N_MID: usize = 5;
const N_SMALL: usize = 3;
const POINTS_PER_SMALL: usize = 100;

/// Spreads (circle radii) of the three hierarchy levels, coarse to fine.
pub const DEFAULT_SPREAD: [f64; 3] = [10.0, 2.0, 0.4];
/// Standard deviation of the isotropic Gaussian noise around each fine center.
pub const DEFAULT_NOISE_SD: f64 = 0.08;

/// One categorical labeling of a dataset's rows.
///
/// `values[i]` indexes into `classes`; classes are ordered by first
/// appearance in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelColumn {
    pub name: String,
    pub values: Vec<usize>,
    pub classes: Vec<String>,
}

impl LabelColumn {
    /// Number of distinct classes.
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

/// A feature matrix with zero or more label columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: DataMatrix,
    pub labels: Vec<LabelColumn>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    /// Number of rows.
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// The last (finest-grained by convention) label column, if any.
    pub fn finest_label(&self) -> Option<&LabelColumn> {
        self.labels.last()
    }
}

/// Selects a CSV column either by header name or by zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnId {
    Name(String),
    Index(usize),
}

/// Generates the standard hierarchical benchmark with default geometry.
pub fn synth_hierarchy(seed: u64) -> LabeledDataset {
    synth_hierarchy_with(seed, DEFAULT_SPREAD, DEFAULT_NOISE_SD)
        .expect("default parameters are valid")
}

/// Generates the hierarchical benchmark with custom radii and noise.
///
/// Level centers sit on circles of radius `spread[level]` around their
/// parent center, at angles fixed by the group index — so the cluster
/// layout and all three label columns are identical across seeds, and
/// only the per-point noise depends on `seed`.
///
/// # Errors
/// `spread` not strictly decreasing and positive, or `noise_sd` not a
/// finite non-negative number.
pub fn synth_hierarchy_with(
    seed: u64,
    spread: [f64; 3],
    noise_sd: f64,
) -> Result<LabeledDataset> {
    if !(spread[0] > spread[1] && spread[1] > spread[2] && spread[2] > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spread radii must be strictly decreasing and positive, got {spread:?}"
        )));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise_sd must be finite and non-negative, got {noise_sd}"
        )));
    }

    let circle = |radius: f64, idx: usize, count: usize| {
        let angle = std::f64::consts::TAU * idx as f64 / count as f64;
        (radius * angle.cos(), radius * angle.sin())
    };

    let mut rng = Rng::new(seed);
    let n = N_LARGE * N_MID * N_SMALL * POINTS_PER_SMALL;
    let mut coords = Vec::with_capacity(n * 2);
    let mut level0 = Vec::with_capacity(n);
    let mut level1 = Vec::with_capacity(n);
    let mut level2 = Vec::with_capacity(n);
    for large in 0..N_LARGE {
        let (lx, ly) = circle(spread[0], large, N_LARGE);
        for mid in 0..N_MID {
            let (mx, my) = circle(spread[1], mid, N_MID);
            for small in 0..N_SMALL {
                let (sx, sy) = circle(spread[2], small, N_SMALL);
                let (cx, cy) = (lx + mx + sx, ly + my + sy);
                for _ in 0..POINTS_PER_SMALL {
                    coords.push(cx + noise_sd * rng.next_normal());
                    coords.push(cy + noise_sd * rng.next_normal());
                    level0.push(large);
                    level1.push(large * N_MID + mid);
                    level2.push((large * N_MID + mid) * N_SMALL + small);
                }
            }
        }
    }

    let label = |name: &str, values: Vec<usize>, count: usize| LabelColumn {
        name: name.to_string(),
        values,
        classes: (0..count).map(|c| c.to_string()).collect(),
    };
    Ok(LabeledDataset {
        x: DataMatrix::new(n, 2, coords)?,
        labels: vec![
            label("label0", level0, N_LARGE),
            label("label1", level1, N_LARGE * N_MID),
            label("label2", level2, N_LARGE * N_MID * N_SMALL),
        ],
        feature_names: vec!["x0".into(), "x1".into()],
    })
}

/// Loads a CSV file, factorizing the columns named in `label_cols` into
/// dense class ids (classes ordered by first appearance) and parsing
/// every remaining column as `f64`.
///
/// Without a header, features are named `x0, x1, ...` and label columns
/// `label0, ...` in the order requested; `ColumnId::Name` requires
/// `has_header`.
///
/// # Errors
/// I/O failures, ragged rows, unparseable numbers (with the 1-based
/// line number), unknown or duplicate label columns, or a file with no
/// data rows or no feature columns.
pub fn load_csv(path: &Path, has_header: bool, label_cols: &[ColumnId]) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;

    let header: Option<Vec<String>> = if has_header {
        Some(
            reader
                .headers()
                .map_err(|e| csv_parse_error(path, &e))?
                .iter()
                .map(str::to_string)
                .collect(),
        )
    } else {
        None
    };

    let mut label_idx = Vec::with_capacity(label_cols.len());
    for col in label_cols {
        let idx = match col {
            ColumnId::Index(i) => *i,
            ColumnId::Name(name) => match &header {
                Some(names) => names.iter().position(|h| h == name).ok_or_else(|| {
                    Error::InvalidInput(format!("no column named {name:?} in {}", path.display()))
                })?,
                None => {
                    return Err(Error::InvalidInput(
                        "label columns by name require a header row".into(),
                    ))
                }
            },
        };
        if label_idx.contains(&idx) {
            return Err(Error::InvalidInput(format!(
                "label column {idx} selected more than once"
            )));
        }
        label_idx.push(idx);
    }

    let mut coords: Vec<f64> = Vec::new();
    let mut label_raw: Vec<Vec<String>> = vec![Vec::new(); label_idx.len()];
    let mut n_cols = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_parse_error(path, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        let width = *n_cols.get_or_insert(record.len());
        if record.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected {width} fields, found {}", record.len()),
            });
        }
        if label_idx.iter().any(|&i| i >= width) {
            return Err(Error::InvalidInput(format!(
                "label column index out of range for {width} columns"
            )));
        }
        for (i, field) in record.iter().enumerate() {
            if let Some(slot) = label_idx.iter().position(|&l| l == i) {
                label_raw[slot].push(field.to_string());
            } else {
                coords.push(field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("column {i}: {e} (got {field:?})"),
                })?);
            }
        }
    }

    let width = n_cols.ok_or_else(|| Error::InvalidInput("no data rows".into()))?;
    let n_features = width - label_idx.len();
    if n_features == 0 {
        return Err(Error::InvalidInput("no feature columns left".into()));
    }
    let rows = label_raw
        .first()
        .map_or(coords.len() / n_features, Vec::len);

    let feature_names = match &header {
        Some(names) => names
            .iter()
            .enumerate()
            .filter(|(i, _)| !label_idx.contains(i))
            .map(|(_, name)| name.clone())
            .collect(),
        None => (0..n_features).map(|i| format!("x{i}")).collect(),
    };
    let labels = label_idx
        .iter()
        .zip(label_raw)
        .enumerate()
        .map(|(slot, (&idx, raw))| {
            let name = header
                .as_ref()
                .map_or_else(|| format!("label{slot}"), |names| names[idx].clone());
            factorize(name, raw)
        })
        .collect();

    Ok(LabeledDataset {
        x: DataMatrix::new(rows, n_features, coords)?,
        labels,
        feature_names,
    })
}

fn csv_parse_error(path: &Path, e: &csv::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line()),
        msg: e.to_string(),
    }
}

fn factorize(name: String, raw: Vec<String>) -> LabelColumn {
    let mut classes: Vec<String> = Vec::new();
    let values = raw
        .into_iter()
        .map(|s| match classes.iter().position(|c| *c == s) {
            Some(i) => i,
            None => {
                classes.push(s);
                classes.len() - 1
            }
        })
        .collect();
    LabelColumn {
        name,
        values,
        classes,
    }
}

/// Writes a dataset as CSV: feature columns first (under their names),
/// then one column per label (class strings). Floats use shortest
/// round-trip formatting.
pub fn save_labeled_csv(path: &Path, data: &LabeledDataset) -> Result<()> {
    for col in &data.labels {
        check_len(col.values.len(), data.n(), &col.name)?;
    }
    let mut out = open_writer(path)?;
    let mut line = data.feature_names.join(",");
    for col in &data.labels {
        line.push(',');
        line.push_str(&col.name);
    }
    let write = |out: &mut BufWriter<File>, s: &str| {
        writeln!(out, "{s}").map_err(|e| Error::io(path, e))
    };
    write(&mut out, &line)?;
    for i in 0..data.n() {
        let mut line = join_floats(data.x.row(i));
        for col in &data.labels {
            line.push(',');
            line.push_str(&col.classes[col.values[i]]);
        }
        write(&mut out, &line)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes an embedding as CSV with header `y0,y1,...`, an optional
/// `label` column (class strings), and an optional `anchor` column
/// (assigned anchor index). If `stars` is given, a companion file named
/// `<path>.stars.csv` receives the star coordinates with header
/// `s0,s1,...,anchor_id`.
pub fn save_embedding_csv(
    path: &Path,
    y: &DataMatrix,
    label: Option<&LabelColumn>,
    stars: Option<&DataMatrix>,
    assignment: Option<&[usize]>,
) -> Result<()> {
    if let Some(col) = label {
        check_len(col.values.len(), y.rows(), "label")?;
    }
    if let Some(assignment) = assignment {
        check_len(assignment.len(), y.rows(), "assignment")?;
    }
    if let Some(s) = stars {
        if s.cols() != y.cols() {
            return Err(Error::DimensionMismatch(format!(
                "stars have {} columns, embedding has {}",
                s.cols(),
                y.cols()
            )));
        }
    }

    let mut out = open_writer(path)?;
    let mut header: Vec<String> = (0..y.cols()).map(|c| format!("y{c}")).collect();
    if label.is_some() {
        header.push("label".into());
    }
    if assignment.is_some() {
        header.push("anchor".into());
    }
    writeln!(out, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
    for i in 0..y.rows() {
        let mut line = join_floats(y.row(i));
        if let Some(col) = label {
            line.push(',');
            line.push_str(&col.classes[col.values[i]]);
        }
        if let Some(assignment) = assignment {
            line.push(',');
            line.push_str(&assignment[i].to_string());
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    if let Some(s) = stars {
        let mut name = path.as_os_str().to_owned();
        name.push(".stars.csv");
        save_stars_csv(Path::new(&name), s)?;
    }
    Ok(())
}

/// Writes star coordinates as CSV with header `s0,s1,...,anchor_id`.
pub fn save_stars_csv(path: &Path, stars: &DataMatrix) -> Result<()> {
    let mut out = open_writer(path)?;
    let header: Vec<String> = (0..stars.cols()).map(|c| format!("s{c}")).collect();
    writeln!(out, "{},anchor_id", header.join(",")).map_err(|e| Error::io(path, e))?;
    for i in 0..stars.rows() {
        writeln!(out, "{},{i}", join_floats(stars.row(i))).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn join_floats(row: &[f64]) -> String {
    let mut line = String::new();
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&v.to_string());
    }
    line
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} has {got} entries for {want} rows"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{distance_correlation, knn_accuracy};

    #[test]
    fn hierarchy_has_documented_shape() {
        let data = synth_hierarchy(0);
        assert_eq!(data.x.rows(), 7500);
        assert_eq!(data.x.cols(), 2);
        assert_eq!(data.feature_names, ["x0", "x1"]);
        let names: Vec<&str> = data.labels.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["label0", "label1", "label2"]);
        let counts: Vec<usize> = data.labels.iter().map(LabelColumn::n_classes).collect();
        assert_eq!(counts, [5, 25, 75]);
        for col in &data.labels {
            for level in 0..col.n_classes() {
                assert!(col.values.contains(&level), "class {level} unused");
            }
        }
        assert_eq!(data.finest_label().unwrap().name, "label2");
    }

    #[test]
    fn hierarchy_labels_nest() {
        let data = synth_hierarchy(3);
        for i in 0..data.n() {
            let (l0, l1, l2) = (
                data.labels[0].values[i],
                data.labels[1].values[i],
                data.labels[2].values[i],
            );
            assert_eq!(l1 / 5, l0);
            assert_eq!(l2 / 3, l1);
        }
    }

    #[test]
    fn hierarchy_seeding_moves_noise_not_structure() {
        let a = synth_hierarchy(7);
        let b = synth_hierarchy(7);
        assert_eq!(a.x.data(), b.x.data());

        let c = synth_hierarchy(8);
        assert_eq!(a.labels, c.labels);
        assert_ne!(a.x.data(), c.x.data());
    }

    #[test]
    fn hierarchy_is_cleanly_separated_at_every_level() {
        let data = synth_hierarchy(0);
        for col in &data.labels {
            let acc = knn_accuracy(&data.x, &col.values, 5).unwrap();
            assert!(acc >= 0.99, "{} accuracy {acc}", col.name);
        }
        let (r, _) = distance_correlation(&data.x, &data.x, 100_000, 0).unwrap();
        assert!((r - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hierarchy_rejects_bad_geometry() {
        assert!(synth_hierarchy_with(0, [2.0, 2.0, 0.4], 0.1).is_err());
        assert!(synth_hierarchy_with(0, [10.0, 2.0, 0.0], 0.1).is_err());
        assert!(synth_hierarchy_with(0, [0.4, 2.0, 10.0], 0.1).is_err());
        assert!(synth_hierarchy_with(0, [10.0, 2.0, 0.4], -0.1).is_err());
        assert!(synth_hierarchy_with(0, [10.0, 2.0, 0.4], f64::NAN).is_err());
    }

    #[test]
    fn loads_headerless_numeric_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.csv");
        std::fs::write(&path, "1,2\n3,4\n5,6\n").unwrap();
        let data = load_csv(&path, false, &[]).unwrap();
        assert_eq!(data.x.rows(), 3);
        assert_eq!(data.x.data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(data.feature_names, ["x0", "x1"]);
        assert!(data.labels.is_empty());
    }

    #[test]
    fn factorizes_string_labels_by_first_appearance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pets.csv");
        std::fs::write(&path, "a,b,tag\n1.0,2.0,cat\n3.0,4.0,dog\n5.0,6.0,cat\n").unwrap();

        let by_name = load_csv(&path, true, &[ColumnId::Name("tag".into())]).unwrap();
        assert_eq!(by_name.feature_names, ["a", "b"]);
        assert_eq!(by_name.labels[0].name, "tag");
        assert_eq!(by_name.labels[0].classes, ["cat", "dog"]);
        assert_eq!(by_name.labels[0].values, [0, 1, 0]);
        assert_eq!(by_name.x.data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);

        let by_index = load_csv(&path, true, &[ColumnId::Index(2)]).unwrap();
        assert_eq!(by_name, by_index);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2\n1,oops\n").unwrap();
        match load_csv(&path, false, &[]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, "1,2\n1,2,3\n").unwrap();
        assert!(matches!(
            load_csv(&path, false, &[]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn rejects_unknown_and_degenerate_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(load_csv(&path, true, &[ColumnId::Name("nope".into())]).is_err());
        assert!(load_csv(&path, false, &[ColumnId::Name("a".into())]).is_err());
        assert!(load_csv(&path, true, &[ColumnId::Index(0), ColumnId::Index(0)]).is_err());
        assert!(load_csv(&path, true, &[ColumnId::Index(0), ColumnId::Index(1)]).is_err());
        assert!(load_csv(&path, true, &[ColumnId::Index(9)]).is_err());
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(load_csv(&path, true, &[]).is_err());
    }

    #[test]
    fn synthetic_dataset_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let data = synth_hierarchy(5);
        save_labeled_csv(&path, &data).unwrap();
        let cols = [
            ColumnId::Name("label0".into()),
            ColumnId::Name("label1".into()),
            ColumnId::Name("label2".into()),
        ];
        let back = load_csv(&path, true, &cols).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn awkward_floats_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let x = DataMatrix::from_rows(&[
            vec![0.1, 1.0 / 3.0],
            vec![1e-17, -2.5e300],
            vec![-0.0, 123_456_789.123_456_79],
        ])
        .unwrap();
        save_embedding_csv(&path, &x, None, None, None).unwrap();
        let back = load_csv(&path, true, &[]).unwrap();
        assert_eq!(back.x.rows(), 3);
        for (a, b) in x.data().iter().zip(back.x.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn embedding_csv_layout_matches_contract() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        let y = DataMatrix::from_rows(&[vec![0.5, -1.25], vec![2.0, 3.0]]).unwrap();
        let label = LabelColumn {
            name: "label2".into(),
            values: vec![1, 0],
            classes: vec!["0".into(), "3".into()],
        };
        let stars = DataMatrix::from_rows(&[vec![1.0, 1.5], vec![-2.0, 0.25]]).unwrap();
        save_embedding_csv(&path, &y, Some(&label), Some(&stars), Some(&[0, 1])).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["y0,y1,label,anchor", "0.5,-1.25,3,0", "2,3,0,1"]);

        let star_text =
            std::fs::read_to_string(dir.path().join("emb.csv.stars.csv")).unwrap();
        let star_lines: Vec<&str> = star_text.lines().collect();
        assert_eq!(star_lines, ["s0,s1,anchor_id", "1,1.5,0", "-2,0.25,1"]);
    }

    #[test]
    fn label_only_row_matches_spec_example() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let y = DataMatrix::from_rows(&[vec![0.5, -1.25]]).unwrap();
        let label = LabelColumn {
            name: "label".into(),
            values: vec![0],
            classes: vec!["3".into()],
        };
        save_embedding_csv(&path, &y, Some(&label), None, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "y0,y1,label\n0.5,-1.25,3\n");
    }

    #[test]
    fn save_rejects_mismatched_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let y = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let short = LabelColumn {
            name: "l".into(),
            values: vec![0],
            classes: vec!["a".into()],
        };
        assert!(save_embedding_csv(&path, &y, Some(&short), None, None).is_err());
        assert!(save_embedding_csv(&path, &y, None, None, Some(&[0])).is_err());
        let bad_stars = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(save_embedding_csv(&path, &y, None, Some(&bad_stars), None).is_err());
    }
}
