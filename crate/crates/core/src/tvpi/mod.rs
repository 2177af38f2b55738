//! Feasibility of the rank-one sign-fixed system
//!
//! ```text
//!     s_i (N_ij - k) <= v_j <= s_i (N_ij + k),    s_i >= 1,
//! ```
//!
//! where `N` is `M` with rows folded by the sign of `u`, `s_i = 1/|u_i|` and
//! `v` is the right factor. Every inequality has at most two variables.
//!
//! Two solvers are provided. [`Method::Potentials`] (the default) is exact up
//! to rounding: each column's sign of `v` is forced by the data, and after
//! taking logs the system becomes a set of difference constraints whose
//! feasibility is a negative-cycle test. [`Method::Simplex`] minimizes the
//! largest violation with a dense phase-1 simplex under Bland's rule and is
//! kept as an independent second route for small systems.

mod potentials;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{FactorPair, LinalgError, Matrix};
use crate::signgraph::{Sign, SignPattern};

/// Cap on `s_i` used by the simplex route.
pub const MAX_SCALE: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TvpiError {
    #[error("sign pattern is {pattern:?} but matrix is {matrix:?}")]
    PatternShape {
        pattern: (usize, usize),
        matrix: (usize, usize),
    },
    #[error("constraint {index} references scale var {scale} / value var {value} outside the system")]
    BadIndex { index: usize, scale: usize, value: usize },
    #[error("constraint {index} has lower {lower} > upper {upper} or non-finite bounds")]
    BadBounds { index: usize, lower: f64, upper: f64 },
    #[error("witness has {witness:?} variables but pattern keeps {pattern:?}")]
    WitnessShape {
        witness: (usize, usize),
        pattern: (usize, usize),
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `scale * lower <= value <= scale * upper` for one (scale var, value var) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub scale: usize,
    pub value: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    scale_vars: usize,
    value_vars: usize,
    constraints: Vec<Constraint>,
}

impl LinearSystem {
    pub fn new(scale_vars: usize, value_vars: usize, constraints: Vec<Constraint>) -> Result<Self, TvpiError> {
        for (index, c) in constraints.iter().enumerate() {
            if c.scale >= scale_vars || c.value >= value_vars {
                return Err(TvpiError::BadIndex {
                    index,
                    scale: c.scale,
                    value: c.value,
                });
            }
            if !(c.lower.is_finite() && c.upper.is_finite() && c.lower <= c.upper) {
                return Err(TvpiError::BadBounds {
                    index,
                    lower: c.lower,
                    upper: c.upper,
                });
            }
        }
        Ok(Self {
            scale_vars,
            value_vars,
            constraints,
        })
    }

    pub fn scale_vars(&self) -> usize {
        self.scale_vars
    }

    pub fn value_vars(&self) -> usize {
        self.value_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Scalar inequalities: two per constraint plus one `s_i >= 1` per scale var.
    pub fn inequality_count(&self) -> usize {
        2 * self.constraints.len() + self.scale_vars
    }

    /// Largest violation of `(s, v)`, measured per unit of `s_i` so that it is
    /// directly comparable to the entry-wise error `|N_ij - v_j / s_i| - k`.
    pub fn max_violation(&self, s: &[f64], v: &[f64]) -> f64 {
        let bounds = s.iter().map(|&si| (1.0 - si).max(0.0));
        let rows = self.constraints.iter().map(|c| {
            let ratio = v[c.value] / s[c.scale];
            (c.lower - ratio).max(ratio - c.upper).max(0.0)
        });
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub max_violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[default]
    Potentials,
    Simplex,
}

/// Default feasibility tolerance for a matrix: `1e-9 (1 + ‖M‖∞)`.
pub fn default_tolerance(m: &Matrix) -> f64 {
    1e-9 * (1.0 + crate::linalg::linf_norm(m))
}

/// Sign-folds `M` by `pattern` and emits one constraint per kept (row, col).
///
/// Rows and columns with sign zero are dropped (their factor entries are 0).
/// Scale var `a` is the a-th kept row, value var `b` the b-th kept column.
pub fn build_system(m: &Matrix, k: f64, pattern: &SignPattern) -> Result<LinearSystem, TvpiError> {
    let shape = (pattern.row_signs.len(), pattern.col_signs.len());
    if shape != m.shape() {
        return Err(TvpiError::PatternShape {
            pattern: shape,
            matrix: m.shape(),
        });
    }
    let rows: Vec<usize> = kept(&pattern.row_signs);
    let cols: Vec<usize> = kept(&pattern.col_signs);
    let mut constraints = Vec::with_capacity(rows.len() * cols.len());
    for (a, &i) in rows.iter().enumerate() {
        let fold = pattern.row_signs[i].as_f64();
        for (b, &j) in cols.iter().enumerate() {
            let n = fold * m[(i, j)];
            constraints.push(Constraint {
                scale: a,
                value: b,
                lower: n - k,
                upper: n + k,
            });
        }
    }
    LinearSystem::new(rows.len(), cols.len(), constraints)
}

fn kept(signs: &[Sign]) -> Vec<usize> {
    signs
        .iter()
        .enumerate()
        .filter(|(_, &s)| s != Sign::Zero)
        .map(|(i, _)| i)
        .collect()
}

/// Decides feasibility with the default method.
pub fn solve_feasibility(sys: &LinearSystem, tol: f64) -> Feasibility {
    solve_feasibility_with(sys, tol, Method::default())
}

pub fn solve_feasibility_with(sys: &LinearSystem, tol: f64, method: Method) -> Feasibility {
    assert!(tol > 0.0, "tolerance must be positive");
    match method {
        Method::Potentials => potentials::solve(sys),
        Method::Simplex => simplex::solve(sys, tol),
    }
}

/// Maps a witness back to rank-one factors: `u_i = sign_i / s_i`,
/// `v_j = sign_j |v_j|`, zeros for dropped rows and columns.
pub fn witness_to_factors(w: &Witness, pattern: &SignPattern) -> Result<FactorPair, TvpiError> {
    let rows = kept(&pattern.row_signs);
    let cols = kept(&pattern.col_signs);
    if (w.s.len(), w.v.len()) != (rows.len(), cols.len()) {
        return Err(TvpiError::WitnessShape {
            witness: (w.s.len(), w.v.len()),
            pattern: (rows.len(), cols.len()),
        });
    }
    let mut u = vec![0.0; pattern.row_signs.len()];
    for (a, &i) in rows.iter().enumerate() {
        u[i] = pattern.row_signs[i].as_f64() / w.s[a];
    }
    let mut v = vec![0.0; pattern.col_signs.len()];
    for (b, &j) in cols.iter().enumerate() {
        v[j] = pattern.col_signs[j].as_f64() * w.v[b].abs();
    }
    Ok(FactorPair::rank_one(&u, &v)?)
}
