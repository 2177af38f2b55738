use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::LinalgError;

/// A dense real matrix stored in row-major order.
///
/// Entries are always finite: constructors reject NaN and infinities.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows, checking that all rows have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(LinalgError::RaggedRow {
                    row: i,
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let x = f(i, j);
                assert!(x.is_finite(), "non-finite entry at ({i}, {j})");
                m.data[i * cols + j] = x;
            }
        }
        m
    }

    /// Column vector (n×1).
    pub fn column(values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// Row vector (1×n).
    pub fn row_vector(values: &[f64]) -> Result<Self, LinalgError> {
        Self::new(1, values.len(), values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (p, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| f(self[(i, j)]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.rows_iter() {
            write!(f, "  ")?;
            for x in row {
                write!(f, "{x:>10.4} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Rank-r factors `left` (m×r) and `right` (r×n) of the approximation `left * right`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    left: Matrix,
    right: Matrix,
}

impl FactorPair {
    pub fn new(left: Matrix, right: Matrix) -> Result<Self, LinalgError> {
        if left.cols() != right.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "factor pair",
                left: left.shape(),
                right: right.shape(),
            });
        }
        Ok(Self { left, right })
    }

    /// Rank-one pair `u vᵀ`.
    pub fn rank_one(u: &[f64], v: &[f64]) -> Result<Self, LinalgError> {
        Self::new(Matrix::column(u)?, Matrix::row_vector(v)?)
    }

    pub fn zeros(rows: usize, cols: usize, rank: usize) -> Self {
        Self {
            left: Matrix::zeros(rows, rank),
            right: Matrix::zeros(rank, cols),
        }
    }

    #[inline]
    pub fn left(&self) -> &Matrix {
        &self.left
    }

    #[inline]
    pub fn right(&self) -> &Matrix {
        &self.right
    }

    pub fn left_mut(&mut self) -> &mut Matrix {
        &mut self.left
    }

    pub fn right_mut(&mut self) -> &mut Matrix {
        &mut self.right
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.left, self.right)
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    /// Shape (m, n) of the product.
    #[inline]
    pub fn product_shape(&self) -> (usize, usize) {
        (self.left.rows(), self.right.cols())
    }

    pub fn product(&self) -> Matrix {
        self.left
            .matmul(&self.right)
            .expect("factor pair dimensions checked on construction")
    }

    /// Scales the left factor by `alpha` and the right by `1/alpha`.
    pub fn rescaled(&self, alpha: f64) -> Self {
        assert!(alpha != 0.0 && alpha.is_finite());
        Self {
            left: self.left.map(|x| x * alpha),
            right: self.right.map(|x| x / alpha),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.left.is_nonnegative() && self.right.is_nonnegative()
    }
}
