use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::paramvec::ParamVector;

/// Row-major dense matrix, the storage format used in suite JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FedError::Dimension {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        DenseMatrix {
            rows: dim,
            cols: dim,
            data,
        }
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::identity(dim);
        m.data.iter_mut().for_each(|v| *v *= value);
        m
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(FedError::Dimension {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        DenseMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    /// Smallest and largest eigenvalue of a symmetric matrix.
    pub fn symmetric_eigen_range(&self) -> (f64, f64) {
        let eig = nalgebra::SymmetricEigen::new(self.to_nalgebra());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self.data[i * self.cols + j] - self.data[j * self.cols + i]).abs() <= tol))
    }
}

impl ParamVector {
    pub(crate) fn from_nalgebra(v: &nalgebra::DVector<f64>) -> Self {
        ParamVector::new(v.iter().cloned().collect())
    }
}
