//! Best rank-r Frobenius approximation by randomized subspace iteration.
//!
//! A Gaussian sketch of width `min(3r, min(m, n))` (2r columns of
//! oversampling) is refined by alternating products with `M` and `Mᵀ`, each
//! followed by re-orthonormalization. After every round the projected block
//! `B = Qᵀ M` is decomposed with one-sided Jacobi, and iteration stops once the
//! leading r Ritz triplets satisfy `‖M vᵢ - σᵢ uᵢ‖ ≤ 1e-10 ‖M‖_F` or after
//! 200 rounds.

use super::{FactorPair, LinalgError, Matrix};
use crate::rng;

const MAX_ROUNDS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-10;

/// Leading singular triplets: `u` is m×r, `vt` is r×n, `sigma` is descending.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
    pub rounds: usize,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> Matrix {
        let r = self.sigma.len();
        let us = Matrix::from_fn(self.u.rows(), r, |i, p| self.u[(i, p)] * self.sigma[p]);
        us.matmul(&self.vt).expect("conforming by construction")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// In-place modified Gram–Schmidt with one re-orthogonalization pass.
/// Columns that collapse numerically are replaced by fresh random directions.
fn orthonormalize(cols: &mut [Vec<f64>], rng: &mut rng::SeededRng) {
    for k in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(k);
        let col = &mut rest[0];
        let mut attempts = 0;
        loop {
            let before = norm(col);
            for _ in 0..2 {
                for q in done.iter() {
                    let c = dot(q, col);
                    col.iter_mut().zip(q).for_each(|(x, qx)| *x -= c * qx);
                }
            }
            let after = norm(col);
            if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
                col.iter_mut().for_each(|x| *x /= after);
                break;
            }
            attempts += 1;
            assert!(attempts < 16, "failed to extend orthonormal basis");
            *col = rng::normal_vec(rng, col.len());
        }
    }
}

/// `M * x` for each column x.
fn mul_cols(m: &Matrix, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|x| m.rows_iter().map(|row| dot(row, x)).collect())
        .collect()
}

/// `Mᵀ * y` for each column y.
fn mul_t_cols(m: &Matrix, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|y| {
            let mut out = vec![0.0; m.cols()];
            for (row, &yi) in m.rows_iter().zip(y) {
                if yi != 0.0 {
                    out.iter_mut().zip(row).for_each(|(o, a)| *o += yi * a);
                }
            }
            out
        })
        .collect()
}

/// One-sided Jacobi on the columns of `a`. Returns the rotation `J` (as
/// columns) such that `a_original * J = a` with mutually orthogonal columns.
fn jacobi_orthogonalize(a: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let l = a.len();
    let mut j: Vec<Vec<f64>> = (0..l)
        .map(|i| (0..l).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..l {
            for q in p + 1..l {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut *a, j.as_mut_slice()] {
                    let (lo, hi) = cols.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (xp, xq) = (*x, *y);
                        *x = c * xp - s * xq;
                        *y = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    j
}

struct Ritz {
    sigma: Vec<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

/// Singular triplets of `M` restricted to the basis `q`, sorted descending.
fn ritz(m: &Matrix, q: &[Vec<f64>]) -> Ritz {
    // Columns of Bᵀ = Mᵀ Q.
    let mut bt = mul_t_cols(m, q);
    let rot = jacobi_orthogonalize(&mut bt);
    let mut order: Vec<usize> = (0..bt.len()).collect();
    let sig: Vec<f64> = bt.iter().map(|c| norm(c)).collect();
    order.sort_by(|&a, &b| sig[b].total_cmp(&sig[a]));
    let mut out = Ritz {
        sigma: Vec::new(),
        u: Vec::new(),
        v: Vec::new(),
    };
    for &k in &order {
        let s = sig[k];
        let v = if s > 0.0 {
            bt[k].iter().map(|x| x / s).collect()
        } else {
            vec![0.0; m.cols()]
        };
        let mut u = vec![0.0; m.rows()];
        for (qc, &w) in q.iter().zip(&rot[k]) {
            u.iter_mut().zip(qc).for_each(|(o, x)| *o += w * x);
        }
        out.sigma.push(s);
        out.u.push(u);
        out.v.push(v);
    }
    out
}

/// Leading `rank` singular triplets of `m`, deterministic for a given seed.
pub fn truncated_svd(m: &Matrix, rank: usize, seed: u64) -> Result<TruncatedSvd, LinalgError> {
    let (rows, cols) = m.shape();
    let max = rows.min(cols);
    if rank == 0 || rank > max {
        return Err(LinalgError::RankOutOfRange { rank, max });
    }
    let fro = m.frobenius_norm();
    let mut rng = rng::seeded(seed);
    let width = (3 * rank).min(max);

    let omega: Vec<Vec<f64>> = (0..width).map(|_| rng::normal_vec(&mut rng, cols)).collect();
    let mut q = mul_cols(m, &omega);
    orthonormalize(&mut q, &mut rng);

    let mut rounds = 0;
    let mut triplets = ritz(m, &q);
    while fro > 0.0 && rounds < MAX_ROUNDS {
        let residual: f64 = (0..rank)
            .map(|i| {
                let mv = mul_cols(m, std::slice::from_ref(&triplets.v[i])).remove(0);
                mv.iter()
                    .zip(&triplets.u[i])
                    .map(|(a, b)| (a - triplets.sigma[i] * b).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt();
        if residual <= RESIDUAL_TOL * fro {
            break;
        }
        let mut p = mul_t_cols(m, &q);
        orthonormalize(&mut p, &mut rng);
        q = mul_cols(m, &p);
        orthonormalize(&mut q, &mut rng);
        triplets = ritz(m, &q);
        rounds += 1;
    }

    let u = Matrix::from_fn(rows, rank, |i, p| triplets.u[p][i]);
    let vt = Matrix::from_fn(rank, cols, |p, j| triplets.v[p][j]);
    triplets.sigma.truncate(rank);
    Ok(TruncatedSvd {
        u,
        sigma: triplets.sigma,
        vt,
        rounds,
    })
}

/// Factors of the best rank-r Frobenius approximation, with the singular
/// values split evenly (`U √Σ`, `√Σ Vᵀ`).
pub fn rank_r_l2_init(m: &Matrix, rank: usize, seed: u64) -> Result<FactorPair, LinalgError> {
    let svd = truncated_svd(m, rank, seed)?;
    let root: Vec<f64> = svd.sigma.iter().map(|s| s.sqrt()).collect();
    let left = Matrix::from_fn(m.rows(), rank, |i, p| svd.u[(i, p)] * root[p]);
    let right = Matrix::from_fn(rank, m.cols(), |p, j| svd.vt[(p, j)] * root[p]);
    FactorPair::new(left, right)
}
