//! Dense row-major matrix storage.
//!
//! One flat `Vec<f64>` in row-major order, so each observation is a
//! contiguous slice — the force loop walks point vectors, and cache
//! locality there is what the layout is for. Matrices are validated at
//! construction (finite entries, nonempty shape) and immutable afterward.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    /// Build from a flat row-major buffer.
    ///
    /// # Errors
    /// Rejects empty shapes, `data.len() != rows * cols`, and any
    /// non-finite entry (reported with its row/column).
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<DataMatrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix shape {rows}x{cols} must be at least 1x1"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "buffer holds {} values, shape {rows}x{cols} needs {}",
                data.len(),
                rows * cols
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(DataMatrix { rows, cols, data })
    }

    /// Build from row slices (convenience for tests and small inputs).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DataMatrix> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(
                "rows have unequal lengths".into(),
            ));
        }
        DataMatrix::new(n, d, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// The full row-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the buffer for in-place optimization. The
    /// finiteness guarantee moves to the caller; the optimizer re-checks
    /// at every epoch boundary.
    pub fn data_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }

    /// Stack `below` under `self` (column counts must match).
    pub fn vstack(&self, below: &DataMatrix) -> Result<DataMatrix> {
        if self.cols != below.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {}-column matrix under {}-column matrix",
                below.cols, self.cols
            )));
        }
        let mut data = Vec::with_capacity((self.rows + below.rows) * self.cols);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&below.data);
        DataMatrix::new(self.rows + below.rows, self.cols, data)
    }

    /// New matrix with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<DataMatrix> {
        DataMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_access() {
        let m = DataMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(m.get(0, 2), 3.0);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(DataMatrix::new(0, 3, vec![]).is_err());
        assert!(DataMatrix::new(2, 2, vec![1.0; 3]).is_err());
        let err = DataMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 4.0]).unwrap_err();
        match err {
            Error::NonFinite { row, col } => {
                assert_eq!((row, col), (1, 0));
            }
            other => panic!("expected NonFinite, got {other}"),
        }
        assert!(DataMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn from_rows_checks_raggedness() {
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.get(1, 1), 4.0);
    }

    #[test]
    fn vstack_appends_rows() {
        let a = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = DataMatrix::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let s = a.vstack(&b).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(2), &[5.0, 6.0]);
        assert!(a.vstack(&DataMatrix::from_rows(&[vec![1.0]]).unwrap()).is_err());
    }

    #[test]
    fn scaled_and_max_abs() {
        let m = DataMatrix::from_rows(&[vec![-4.0, 2.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(m.max_abs(), 4.0);
        let half = m.scaled(0.5).unwrap();
        assert_eq!(half.row(0), &[-2.0, 1.0]);
    }
}
