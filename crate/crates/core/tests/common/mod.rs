//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use num::{BigRational, Signed, Zero};

use linf_lra::linalg::{linf_norm, Matrix};
use linf_lra::reductions::{Literal, NaeInstance};
use linf_lra::rng::{normal, SeededRng};
use linf_lra::tvpi::{self, Constraint, LinearSystem, Method};

type Row = (Vec<BigRational>, BigRational);

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact feasibility by Fourier–Motzkin elimination over the rationals.
/// Variables are `s` then `v`; `s >= 1` stands in for `s > 0` since the
/// ratio constraints are homogeneous.
pub fn fm_feasible(sys: &LinearSystem) -> bool {
    let (ns, nv) = (sys.scale_vars(), sys.value_vars());
    let n = ns + nv;
    let zero = BigRational::zero();
    let mut rows: Vec<Row> = Vec::new();
    let unit = |i: usize, a: BigRational| {
        let mut c = vec![BigRational::zero(); n];
        c[i] = a;
        c
    };
    for i in 0..ns {
        rows.push((unit(i, q(-1.0)), q(-1.0)));
    }
    for c in sys.constraints() {
        // lower*s - v <= 0 and v - upper*s <= 0
        let mut a = unit(ns + c.value, q(-1.0));
        a[c.scale] = q(c.lower);
        rows.push((a, zero.clone()));
        let mut b = unit(ns + c.value, q(1.0));
        b[c.scale] = -q(c.upper);
        rows.push((b, zero.clone()));
    }
    for var in 0..n {
        let (mut pos, mut neg, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.0[var].is_positive() {
                pos.push(r);
            } else if r.0[var].is_negative() {
                neg.push(r);
            } else {
                keep.push(r);
            }
        }
        for (pa, pb) in &pos {
            for (na, nb) in &neg {
                let (fp, fn_) = (-na[var].clone(), pa[var].clone());
                let a: Vec<BigRational> = pa.iter().zip(na).map(|(x, y)| x * &fp + y * &fn_).collect();
                keep.push((a, pb * &fp + nb * &fn_));
            }
        }
        rows = normalize(keep);
    }
    rows.iter().all(|(_, b)| !b.is_negative())
}

fn normalize(rows: Vec<Row>) -> Vec<Row> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (a, b) in rows {
        let lead = a.iter().find(|x| !x.is_zero()).map(|x| x.abs());
        let (a, b) = match lead {
            Some(l) => (a.iter().map(|x| x / &l).collect::<Vec<_>>(), b / &l),
            None => (a, b),
        };
        if seen.insert((a.clone(), b.clone())) {
            out.push((a, b));
        }
    }
    out
}

pub fn objective_1d(c: &[f64], u: &[f64], v: f64) -> f64 {
    c.iter()
        .zip(u)
        .filter(|(_, &a)| a != 0.0)
        .map(|(&b, &a)| (b - a * v).abs())
        .fold(0.0, f64::max)
}

/// Argmin over every pairwise crossing `(b_i + b_j) / (a_i + a_j)` of the
/// sign-folded lines, including `i == j`.
pub fn brute_secant(c: &[f64], u: &[f64]) -> f64 {
    let lines: Vec<(f64, f64)> = c
        .iter()
        .zip(u)
        .filter(|(_, &a)| a != 0.0)
        .map(|(&b, &a)| if a < 0.0 { (-a, -b) } else { (a, b) })
        .collect();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..lines.len() {
        for j in i..lines.len() {
            let v = (lines[i].1 + lines[j].1) / (lines[i].0 + lines[j].0);
            let f = objective_1d(c, u, v);
            if f < best.0 {
                best = (f, v);
            }
        }
    }
    best.1
}

/// Rank-one decision by trying every row sign vector in `{-,0,+}^m` with free
/// column signs, solved by the simplex backend. Transposes so `m <= n`.
pub fn brute_decide(m: &Matrix, k: f64) -> bool {
    let m = if m.rows() > m.cols() { m.transpose() } else { m.clone() };
    let (rows, cols) = m.shape();
    assert!(rows <= 8, "oracle is exponential in the short side");
    let tol = tvpi::default_tolerance(&m);
    'signs: for code in 0..3usize.pow(rows as u32) {
        let mut signs = Vec::with_capacity(rows);
        let mut x = code;
        for _ in 0..rows {
            signs.push(x % 3);
            x /= 3;
        }
        let mut scale_of = vec![None; rows];
        let mut ns = 0;
        for i in 0..rows {
            if signs[i] == 0 {
                if m.row(i).iter().any(|&a| a.abs() > k) {
                    continue 'signs;
                }
            } else {
                scale_of[i] = Some(ns);
                ns += 1;
            }
        }
        let mut cons = Vec::new();
        for i in 0..rows {
            let Some(s) = scale_of[i] else { continue };
            let flip = if signs[i] == 1 { 1.0 } else { -1.0 };
            for j in 0..cols {
                let nij = flip * m[(i, j)];
                cons.push(Constraint {
                    scale: s,
                    value: j,
                    lower: nij - k,
                    upper: nij + k,
                });
            }
        }
        let sys = LinearSystem::new(ns, cols, cons).expect("well formed");
        if tvpi::solve_feasibility_with(&sys, tol, Method::Simplex).is_feasible() {
            return true;
        }
    }
    false
}

pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Gaussian entries rounded to one decimal, so exact ties are possible.
pub fn coarse_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| (normal(rng) * 10.0).round() / 10.0)
}

pub fn threshold_in_range(m: &Matrix, t: f64) -> f64 {
    t * linf_norm(m)
}

/// Every NAE instance over `1..=max_vars` variables with at most `max_clauses`
/// clauses, each clause a multiset of literals and the clause list a multiset.
pub fn nae_instances(max_vars: usize, max_clauses: usize) -> Vec<NaeInstance> {
    let mut out = Vec::new();
    for nx in 1..=max_vars {
        let lits: Vec<Literal> = (0..nx).flat_map(|x| [Literal::pos(x), Literal::neg(x)]).collect();
        let mut clauses = Vec::new();
        for a in 0..lits.len() {
            for b in a..lits.len() {
                for c in b..lits.len() {
                    clauses.push([lits[a], lits[b], lits[c]]);
                }
            }
        }
        let mut lists: Vec<Vec<usize>> = vec![vec![]];
        let mut frontier = lists.clone();
        for _ in 0..max_clauses {
            let mut next = Vec::new();
            for l in &frontier {
                let start = l.last().copied().unwrap_or(0);
                for c in start..clauses.len() {
                    let mut e = l.clone();
                    e.push(c);
                    next.push(e);
                }
            }
            lists.extend(next.iter().cloned());
            frontier = next;
        }
        for l in lists {
            out.push(NaeInstance::new(nx, l.iter().map(|&c| clauses[c]).collect()).expect("valid"));
        }
    }
    out
}
