//! Block coordinate descent for rank-r ℓ∞ approximation.
//!
//! Every coordinate update is an exact one-dimensional minimax problem
//! `min_v max_i |c_i - u_i v|`, solved by the secant (two active lines)
//! exchange in [`secant`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{linf_norm, residual_linf, FactorPair, LinalgError, Matrix};

/// Below this many entries the per-coordinate updates run sequentially.
const PAR_MIN_ENTRIES: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Secant {
    pub value: f64,
    /// Intersections evaluated; 0 when every `u_i` is zero.
    pub iterations: u32,
    /// The two lines meeting at the optimum (equal when one line suffices).
    pub active: Option<(usize, usize)>,
    pub objective: f64,
}

/// Minimizer of `max_{i : u_i != 0} |c_i - u_i v|`, or 0 if `u = 0`.
pub fn solve_1d(c: &[f64], u: &[f64]) -> f64 {
    secant(c, u).value
}

/// [`solve_1d`] restricted to `v >= 0`.
pub fn solve_1d_nonneg(c: &[f64], u: &[f64]) -> f64 {
    solve_1d(c, u).max(0.0)
}

pub fn secant(c: &[f64], u: &[f64]) -> Secant {
    assert_eq!(c.len(), u.len(), "secant: c and u differ in length");
    // Fold signs so that every slope is positive: |c_i - u_i v| = |b_i - a_i v|.
    let line = |i: usize| -> (f64, f64) {
        if u[i] < 0.0 {
            (-u[i], -c[i])
        } else {
            (u[i], c[i])
        }
    };
    let mut lo: Option<(usize, f64)> = None;
    let mut hi: Option<(usize, f64)> = None;
    for i in (0..u.len()).filter(|&i| u[i] != 0.0) {
        let (a, b) = line(i);
        let r = b / a;
        if lo.is_none_or(|(_, x)| r < x) {
            lo = Some((i, r));
        }
        if hi.is_none_or(|(_, x)| r > x) {
            hi = Some((i, r));
        }
    }
    let (Some((mut up, _)), Some((mut down, _))) = (lo, hi) else {
        return Secant {
            value: 0.0,
            iterations: 0,
            active: None,
            objective: 0.0,
        };
    };

    // `up` owns an increasing line a v - b, `down` a decreasing line b - a v.
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (a1, b1) = line(up);
        let (a2, b2) = line(down);
        let v = (b1 + b2) / (a1 + a2);
        let h = a1 * v - b1;
        let mut f = 0.0f64;
        for i in (0..u.len()).filter(|&i| u[i] != 0.0) {
            let (a, b) = line(i);
            f = f.max((b - a * v).abs());
        }
        let tie = 1e-12 * (1.0 + f);
        if h >= f - tie {
            return Secant {
                value: v,
                iterations,
                active: Some((up.min(down), up.max(down))),
                objective: f,
            };
        }
        let k = (0..u.len())
            .filter(|&i| u[i] != 0.0)
            .find(|&i| {
                let (a, b) = line(i);
                (b - a * v).abs() >= f - tie
            })
            .expect("the maximum is attained");
        let (a, b) = line(k);
        if b - a * v > 0.0 {
            down = k;
        } else {
            up = k;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcdOptions {
    pub max_sweeps: usize,
    pub rel_tol: f64,
    pub nonnegative: bool,
    /// Seed for randomized initializations built around this run.
    pub seed: u64,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 1000,
            rel_tol: 1e-6,
            nonnegative: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcdReport {
    pub final_error: f64,
    /// Residual before the first sweep followed by one entry per sweep.
    pub error_history: Vec<f64>,
    pub sweeps: usize,
    /// `secant_histogram[k]` counts subproblems solved in `k` intersections.
    pub secant_histogram: Vec<u64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcdError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("max_sweeps must be at least 1")]
    NoSweeps,
    #[error("rel_tol must be positive, got {0}")]
    BadTolerance(f64),
    #[error("nonnegative mode needs a nonnegative initialization")]
    NegativeInit,
}

pub fn bcd(m: &Matrix, init: FactorPair, opts: &BcdOptions) -> Result<(FactorPair, BcdReport), BcdError> {
    if opts.max_sweeps == 0 {
        return Err(BcdError::NoSweeps);
    }
    if opts.rel_tol.is_nan() || opts.rel_tol <= 0.0 {
        return Err(BcdError::BadTolerance(opts.rel_tol));
    }
    if opts.nonnegative && !init.is_nonnegative() {
        return Err(BcdError::NegativeInit);
    }
    let e0 = residual_linf(m, &init)?;
    let (rows, cols) = m.shape();
    let r = init.rank();
    let (mut u, mut vt) = init.into_parts();
    let mut res = m.sub(&u.matmul(&vt)?)?;
    let stop = opts.rel_tol * linf_norm(m);
    let parallel = rows * cols >= PAR_MIN_ENTRIES;
    let solve = |c: &[f64], w: &[f64]| -> Secant {
        let mut s = secant(c, w);
        if opts.nonnegative {
            s.value = s.value.max(0.0);
        }
        s
    };

    let mut history = vec![e0];
    let mut hist: Vec<u64> = Vec::new();
    let mut record = |out: &[(f64, u32)]| {
        for &(_, k) in out {
            let k = k as usize;
            if hist.len() <= k {
                hist.resize(k + 1, 0);
            }
            hist[k] += 1;
        }
    };

    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        for p in 0..r {
            let mut up: Vec<f64> = (0..rows).map(|i| u[(i, p)]).collect();
            let vp: Vec<f64> = vt.row(p).to_vec();
            add_outer(&mut res, &up, &vp, 1.0);

            // Row updates: U(i, p) from residual row i against V(p, :).
            if vp.iter().any(|&x| x != 0.0) {
                let step = |i: usize| {
                    let s = solve(res.row(i), &vp);
                    (s.value, s.iterations)
                };
                let out: Vec<(f64, u32)> = if parallel {
                    (0..rows).into_par_iter().map(step).collect()
                } else {
                    (0..rows).map(step).collect()
                };
                record(&out);
                for (i, (x, _)) in out.into_iter().enumerate() {
                    up[i] = x;
                    u.as_mut_slice()[i * r + p] = x;
                }
            }

            // Column updates: V(p, j) from residual column j against U(:, p).
            if up.iter().any(|&x| x != 0.0) {
                let rt = res.transpose();
                let step = |j: usize| {
                    let s = solve(rt.row(j), &up);
                    (s.value, s.iterations)
                };
                let out: Vec<(f64, u32)> = if parallel {
                    (0..cols).into_par_iter().map(step).collect()
                } else {
                    (0..cols).map(step).collect()
                };
                record(&out);
                vt.row_mut(p).iter_mut().zip(&out).for_each(|(x, &(y, _))| *x = y);
            }

            let vp = vt.row(p).to_vec();
            add_outer(&mut res, &up, &vp, -1.0);
        }
        sweeps += 1;
        let e = linf_norm(&res);
        let prev = *history.last().expect("nonempty");
        history.push(e);
        if prev - e <= stop {
            break;
        }
    }

    let factors = FactorPair::new(u, vt)?;
    // Report the exact residual of the returned factors, not the running one.
    let final_error = residual_linf(m, &factors)?;
    if let Some(last) = history.last_mut() {
        *last = final_error;
    }
    Ok((
        factors,
        BcdReport {
            final_error,
            error_history: history,
            sweeps,
            secant_histogram: hist,
        },
    ))
}

fn add_outer(res: &mut Matrix, u: &[f64], v: &[f64], sign: f64) {
    let cols = res.cols();
    let data = res.as_mut_slice();
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        let row = &mut data[i * cols..(i + 1) * cols];
        for (x, &vj) in row.iter_mut().zip(v) {
            *x += sign * ui * vj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(c: &[f64], u: &[f64], v: f64) -> f64 {
        c.iter().zip(u).filter(|(_, &a)| a != 0.0).map(|(b, a)| (b - a * v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn single_line() {
        let s = secant(&[6.0], &[2.0]);
        assert_eq!(s.value, 3.0);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn symmetric_crossing() {
        let s = secant(&[1.0, -1.0], &[1.0, 1.0]);
        assert_eq!(s.value, 0.0);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn three_lines_match_brute_force() {
        let (c, u) = ([2.0, 2.0, 0.0], [1.0, 2.0, 1.0]);
        let best = [4.0 / 3.0, 1.0, 2.0 / 3.0]
            .into_iter()
            .min_by(|&x, &y| objective(&c, &u, x).total_cmp(&objective(&c, &u, y)))
            .unwrap();
        assert!((solve_1d(&c, &u) - best).abs() < 1e-12);
        assert!((best - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fold_invariance() {
        assert_eq!(solve_1d(&[-2.0], &[-1.0]), 2.0);
        assert_eq!(solve_1d(&[2.0], &[1.0]), 2.0);
        let c = [0.3, -1.2, 2.5, 0.7];
        let u = [1.0, -0.5, 2.0, -3.0];
        let flipped_c: Vec<f64> = c.iter().zip(&u).map(|(x, y)| if *y < 0.0 { -x } else { *x }).collect();
        let flipped_u: Vec<f64> = u.iter().map(|y: &f64| y.abs()).collect();
        assert!((solve_1d(&c, &u) - solve_1d(&flipped_c, &flipped_u)).abs() < 1e-14);
    }

    #[test]
    fn zero_weights_are_ignored() {
        assert_eq!(solve_1d(&[5.0, 1.0], &[0.0, 0.0]), 0.0);
        assert_eq!(secant(&[5.0, 1.0], &[0.0, 0.0]).iterations, 0);
        assert_eq!(solve_1d(&[100.0, 4.0], &[0.0, 2.0]), 2.0);
    }

    #[test]
    fn final_value_is_closed_form() {
        let c = [0.2, -1.1, 3.4, 0.9, -2.2];
        let u = [0.5, 1.5, -0.7, 2.0, 1.1];
        let s = secant(&c, &u);
        let (i, j) = s.active.unwrap();
        let fold = |k: usize| if u[k] < 0.0 { (-u[k], -c[k]) } else { (u[k], c[k]) };
        let ((a1, b1), (a2, b2)) = (fold(i), fold(j));
        assert_eq!(s.value, (b1 + b2) / (a1 + a2));
        for k in [i, j] {
            assert!(((c[k] - u[k] * s.value).abs() - s.objective).abs() < 1e-10);
        }
    }

    #[test]
    fn nonnegative_clamp() {
        assert_eq!(solve_1d(&[-1.0], &[1.0]), -1.0);
        assert_eq!(solve_1d_nonneg(&[-1.0], &[1.0]), 0.0);
        assert_eq!(solve_1d_nonneg(&[3.0], &[1.0]), 3.0);
        let (c, u) = ([-1.0, -2.0], [1.0, 1.0]);
        assert_eq!(solve_1d_nonneg(&c, &u), 0.0);
        assert!(objective(&c, &u, 0.0) < objective(&c, &u, 1e-3));
    }

    #[test]
    fn exact_factors_are_a_fixed_point() {
        let u = Matrix::from_rows(&[[1.0, 0.5], [-2.0, 1.0], [0.3, -1.0]]).unwrap();
        let v = Matrix::from_rows(&[[1.0, 2.0, -1.0, 0.5], [0.0, 1.0, 3.0, -2.0]]).unwrap();
        let init = FactorPair::new(u, v).unwrap();
        let m = init.product();
        let (_, rep) = bcd(&m, init, &BcdOptions::default()).unwrap();
        assert_eq!(rep.sweeps, 1);
        assert!(rep.final_error <= 1e-12 * linf_norm(&m));
    }

    #[test]
    fn history_is_monotone_and_nonnegative_is_kept() {
        let m = Matrix::from_fn(6, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.0 + 0.1 * i as f64);
        let init = FactorPair::new(Matrix::from_fn(6, 2, |i, p| 0.2 + (i + p) as f64 * 0.1), Matrix::from_fn(2, 5, |p, j| 0.5 + (p * j) as f64 * 0.2)).unwrap();
        for nonnegative in [false, true] {
            let opts = BcdOptions {
                nonnegative,
                ..Default::default()
            };
            let (f, rep) = bcd(&m, init.clone(), &opts).unwrap();
            for w in rep.error_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * linf_norm(&m));
            }
            assert_eq!(rep.error_history.len(), rep.sweeps + 1);
            assert_eq!(*rep.error_history.last().unwrap(), rep.final_error);
            if nonnegative {
                assert!(f.is_nonnegative());
            }
        }
    }

    #[test]
    fn option_and_shape_errors() {
        let m = Matrix::zeros(2, 2);
        let init = FactorPair::zeros(2, 2, 1);
        let bad = BcdOptions {
            max_sweeps: 0,
            ..Default::default()
        };
        assert_eq!(bcd(&m, init.clone(), &bad).unwrap_err(), BcdError::NoSweeps);
        let neg = FactorPair::rank_one(&[-1.0, 0.0], &[1.0, 1.0]).unwrap();
        let nn = BcdOptions {
            nonnegative: true,
            ..Default::default()
        };
        assert_eq!(bcd(&m, neg, &nn).unwrap_err(), BcdError::NegativeInit);
        assert!(matches!(bcd(&Matrix::zeros(3, 2), init, &BcdOptions::default()), Err(BcdError::Linalg(_))));
    }
}
