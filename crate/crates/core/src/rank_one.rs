//! Exact rank-one ℓ∞ approximation.
//!
//! [`decide`] answers whether some `u vᵀ` is within `k` of `M` entry-wise. It
//! enumerates the `2^(d-1)` sign patterns forced by the threshold graph and
//! solves one two-variable-per-inequality system per pattern, so its cost is
//! exponential only in the number `d` of non-trivial components.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{linf_norm, residual_linf, FactorPair, Matrix};
use crate::signgraph::{
    build_threshold_graph, enumerate_sign_patterns, propagate_signs, Propagation, Sign, SignPattern, SignPatterns,
    ThresholdGraph,
};
use crate::tvpi::{self, Feasibility, Method};

/// Largest number of free component signs `decide` will enumerate (`2^24` patterns).
pub const MAX_FREE_COMPONENTS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankOneError {
    #[error("exponential budget exceeded: {components} components need 2^{} sign patterns (limit 2^{MAX_FREE_COMPONENTS})", components - 1)]
    BudgetExceeded { components: usize },
    #[error("threshold must be a nonnegative number, got {0}")]
    InvalidThreshold(f64),
    #[error("certificate needs f* >= eps > 0, got f* = {f_star}, eps = {eps}")]
    InvalidCertificate { f_star: f64, eps: f64 },
    #[error("bisection tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decision {
    pub answer: Answer,
    /// Present iff `answer == Yes`; its residual is at most `k + tol`.
    pub witness: Option<FactorPair>,
    /// Patterns solved up to and including the winner (all of them on NO).
    pub patterns_tried: u64,
    pub components: usize,
    pub k: f64,
}

impl Decision {
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecideOptions {
    /// Feasibility tolerance; defaults to `1e-9 (1 + ‖M‖∞)`.
    pub tol: Option<f64>,
    pub method: Method,
    pub parallel: bool,
}

impl Default for DecideOptions {
    fn default() -> Self {
        Self {
            tol: None,
            method: Method::Potentials,
            parallel: true,
        }
    }
}

pub fn decide(m: &Matrix, k: f64) -> Result<Decision, RankOneError> {
    decide_with(m, k, &DecideOptions::default())
}

pub fn decide_with(m: &Matrix, k: f64, opts: &DecideOptions) -> Result<Decision, RankOneError> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(RankOneError::InvalidThreshold(k));
    }
    let tol = opts.tol.unwrap_or_else(|| tvpi::default_tolerance(m));
    let g = build_threshold_graph(m, k);
    let d = g.component_count();
    let no = |patterns_tried| Decision {
        answer: Answer::No,
        witness: None,
        patterns_tried,
        components: d,
        k,
    };

    // With M >= 0, (|u|, |v|) is at least as good as (u, v): one pattern suffices.
    if m.is_nonnegative() {
        let pattern = nonnegative_pattern(&g);
        return Ok(match try_pattern(m, k, tol, opts.method, &pattern) {
            Some(w) => Decision {
                answer: Answer::Yes,
                witness: Some(w),
                patterns_tried: 1,
                components: d,
                k,
            },
            None => no(1),
        });
    }

    if d > MAX_FREE_COMPONENTS + 1 {
        return Err(RankOneError::BudgetExceeded { components: d });
    }
    let patterns = enumerate_sign_patterns(&g);
    if !patterns.contradicted().is_empty() {
        return Ok(no(0));
    }
    let total = patterns.total();
    let found = if opts.parallel && total > 1 {
        (0..total)
            .into_par_iter()
            .map(|idx| evaluate(m, k, tol, opts.method, &patterns, idx))
            .find_first(Option::is_some)
            .flatten()
    } else {
        (0..total).find_map(|idx| evaluate(m, k, tol, opts.method, &patterns, idx))
    };
    Ok(match found {
        Some((idx, w)) => Decision {
            answer: Answer::Yes,
            witness: Some(w),
            patterns_tried: idx + 1,
            components: d,
            k,
        },
        None => no(total),
    })
}

fn evaluate(m: &Matrix, k: f64, tol: f64, method: Method, patterns: &SignPatterns, idx: u64) -> Option<(u64, FactorPair)> {
    try_pattern(m, k, tol, method, &patterns.pattern(idx)).map(|w| (idx, w))
}

fn nonnegative_pattern(g: &ThresholdGraph) -> SignPattern {
    let mut p = SignPattern::all_positive(g.rows(), g.cols());
    for i in g.isolated_rows() {
        p.row_signs[i] = Sign::Zero;
    }
    for j in g.isolated_cols() {
        p.col_signs[j] = Sign::Zero;
    }
    p
}

fn try_pattern(m: &Matrix, k: f64, tol: f64, method: Method, pattern: &SignPattern) -> Option<FactorPair> {
    let sys = tvpi::build_system(m, k, pattern).expect("pattern shaped from the same matrix");
    match tvpi::solve_feasibility_with(&sys, tol, method) {
        Feasibility::Infeasible => None,
        Feasibility::Feasible(w) => {
            let f = tvpi::witness_to_factors(&w, pattern).expect("witness shaped from the same pattern");
            let r = residual_linf(m, &f).expect("conforming");
            (r <= k + tol).then_some(f)
        }
    }
}

/// `false` when some component of `G_b(M, k)` admits no consistent signs,
/// which proves the answer at `k` is NO. `true` is inconclusive.
pub fn sign_completion_lower_bound(m: &Matrix, k: f64) -> bool {
    let g = build_threshold_graph(m, k);
    g.components().iter().enumerate().all(|(c, comp)| {
        matches!(
            propagate_signs(&g, c, comp.seed(), Sign::Positive),
            Propagation::Assigned(_)
        )
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub k_star: f64,
    /// Largest threshold found infeasible, or 0 if none was probed.
    pub k_low: f64,
    pub k_high: f64,
    pub witness: FactorPair,
    pub steps: usize,
}

/// Bisection on `k` over `[0, ‖M‖∞]` until the bracket is at most `bisect_tol` wide.
pub fn minimize(m: &Matrix, bisect_tol: f64) -> Result<MinimizeResult, RankOneError> {
    minimize_with(m, bisect_tol, &DecideOptions::default())
}

pub fn minimize_with(m: &Matrix, bisect_tol: f64, opts: &DecideOptions) -> Result<MinimizeResult, RankOneError> {
    if bisect_tol.is_nan() || bisect_tol <= 0.0 {
        return Err(RankOneError::InvalidTolerance(bisect_tol));
    }
    let mut hi = linf_norm(m);
    let top = decide_with(m, hi, opts)?;
    let mut witness = top.witness.expect("the zero pair meets k = ‖M‖∞");
    let mut lo = 0.0;
    let mut steps = 1;

    let bottom = decide_with(m, 0.0, opts)?;
    steps += 1;
    if let Some(w) = bottom.witness {
        return Ok(MinimizeResult {
            k_star: 0.0,
            k_low: 0.0,
            k_high: 0.0,
            witness: w,
            steps,
        });
    }
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        let d = decide_with(m, mid, opts)?;
        steps += 1;
        match d.witness {
            Some(w) => {
                hi = mid;
                witness = w;
            }
            None => lo = mid,
        }
    }
    Ok(MinimizeResult {
        k_star: hi,
        k_low: lo,
        k_high: hi,
        witness,
        steps,
    })
}

/// Optimality certificate: `true` iff the answer at `f_star - eps` is NO.
pub fn certify(m: &Matrix, f_star: f64, eps: f64) -> Result<bool, RankOneError> {
    if !(eps > 0.0 && f_star >= eps) {
        return Err(RankOneError::InvalidCertificate { f_star, eps });
    }
    Ok(decide(m, f_star - eps)?.answer == Answer::No)
}
