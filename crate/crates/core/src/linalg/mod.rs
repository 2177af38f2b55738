//! Dense matrices, the entry-wise ℓ∞ norm, and the ℓ2 rank-r initializer.

mod io;
mod lowrank;
mod matrix;

pub use io::{parse_matrix, read_matrix, read_matrix_from, write_matrix, write_matrix_to, ParseError};
pub use lowrank::{rank_r_l2_init, truncated_svd, TruncatedSvd};
pub use matrix::{FactorPair, Matrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("data length mismatch: expected {expected}, got {got}")]
    DataLength { expected: usize, got: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },
}

/// `max_ij |a_ij|`.
pub fn linf_norm(a: &Matrix) -> f64 {
    a.as_slice().iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `max_ij |M_ij - (U V)_ij|`, computed without materializing `U V`.
pub fn residual_linf(m: &Matrix, factors: &FactorPair) -> Result<f64, LinalgError> {
    if factors.product_shape() != m.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "residual",
            left: m.shape(),
            right: factors.product_shape(),
        });
    }
    let (u, v) = (factors.left(), factors.right());
    let r = factors.rank();
    let mut worst = 0.0f64;
    for i in 0..m.rows() {
        let u_row = u.row(i);
        for (j, &mij) in m.row(i).iter().enumerate() {
            let x: f64 = (0..r).map(|p| u_row[p] * v[(p, j)]).sum();
            worst = worst.max((mij - x).abs());
        }
    }
    Ok(worst)
}
