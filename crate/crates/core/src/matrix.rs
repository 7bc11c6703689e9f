use serde::{Deserialize, Serialize};

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "data length must equal rows * cols"
        );
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, data)
    }

    /// Copy without column `col`.
    pub fn without_column(&self, col: usize) -> Self {
        assert!(col < self.cols);
        let mut data = Vec::with_capacity(self.rows * (self.cols - 1));
        for r in self.iter_rows() {
            data.extend_from_slice(&r[..col]);
            data.extend_from_slice(&r[col + 1..]);
        }
        Self::new(self.rows, self.cols - 1, data)
    }

    /// Copy with `values` appended as a trailing column.
    pub fn with_column(&self, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.rows);
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for (r, &v) in self.iter_rows().zip(values) {
            data.extend_from_slice(r);
            data.push(v);
        }
        Self::new(self.rows, self.cols + 1, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_surgery() {
        let m = FeatureMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let d = m.without_column(1);
        assert_eq!(d.row(1), &[4.0, 6.0]);
        let a = d.with_column(&[7.0, 8.0]);
        assert_eq!(a.row(0), &[1.0, 3.0, 7.0]);
        assert_eq!(m.select_rows(&[1]).row(0), &[4.0, 5.0, 6.0]);
    }
}
