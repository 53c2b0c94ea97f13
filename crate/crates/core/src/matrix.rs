use crate::{Error, Result};

/// Dense row-major real matrix: one row per sample, one column per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                "matrix needs at least one row and one column",
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Cell {
                row: pos / cols + 1,
                column: pos % cols + 1,
                message: format!("non-finite value {}", data[pos]),
            });
        }
        Ok(Matrix { data, rows, cols })
    }

    /// Builds a matrix whose j-th column is `columns[j]`.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        if columns.iter().any(|c| c.as_ref().len() != rows) {
            return Err(Error::invalid("columns have different lengths"));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend(columns.iter().map(|c| c.as_ref()[i]));
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::invalid("rows have different lengths"));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::from_row_major(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            data: self.data.iter().map(|v| v * c).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` of `self`.
    pub fn select_rows(&self, order: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(order.len() * self.cols);
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: order.len(),
            cols: self.cols,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_and_rows_agree() {
        let a = Matrix::from_columns(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.column(1), vec![3.0, 4.0]);
        assert_eq!(a.select_rows(&[1, 0]).row(0), &[2.0, 4.0]);
    }

    #[test]
    fn rejects_nan_and_ragged() {
        assert!(Matrix::from_rows(&[vec![1.0], vec![f64::NAN]]).is_err());
        assert!(Matrix::from_columns(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Matrix::from_row_major(0, 1, vec![]).is_err());
    }
}
