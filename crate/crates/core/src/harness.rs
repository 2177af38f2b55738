//! Quantized low-rank recovery experiments and the secant benchmark.
//!
//! A trial draws `U` (m×r) then `V` (r×n) with i.i.d. standard normal entries
//! from ChaCha8 seeded with `seed ^ trial`, rounds `M = UV` half-to-even to get
//! `Mq`, and runs BCD on `Mq`.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bcd::{bcd, secant, BcdError, BcdOptions};
use crate::linalg::{rank_r_l2_init, residual_linf, FactorPair, LinalgError, Matrix};
use crate::rank_one::{certify, RankOneError};
use crate::rng::{normal_vec, seeded, trial_seed};

/// Recovery succeeds when BCD reaches this error (plus [`SUCCESS_SLACK`]).
pub const SUCCESS_THRESHOLD: f64 = 0.5;
pub const SUCCESS_SLACK: f64 = 1e-9;
pub const CERTIFY_EPS: f64 = 1e-6;
/// Stopping tolerance used by recovery runs. BCD converges linearly, and a
/// looser rule stops it further than [`CERTIFY_EPS`] from the optimum.
pub const RECOVERY_REL_TOL: f64 = 1e-12;

/// Mixed into the instance seed for random initializations.
const RANDOM_INIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Bcd(#[from] BcdError),
    #[error(transparent)]
    RankOne(#[from] RankOneError),
    #[error("rank {rank} exceeds min({rows}, {cols})")]
    Rank { rank: usize, rows: usize, cols: usize },
    #[error("need at least one trial")]
    NoTrials,
    #[error("dimension must be positive")]
    EmptyDimension,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedInstance {
    pub true_factors: FactorPair,
    pub m: Matrix,
    pub mq: Matrix,
    pub seed: u64,
}

pub fn gen_quantized(m: usize, n: usize, r: usize, seed: u64) -> Result<QuantizedInstance, HarnessError> {
    if m == 0 || n == 0 || r == 0 {
        return Err(HarnessError::EmptyDimension);
    }
    if r > m.min(n) {
        return Err(HarnessError::Rank { rank: r, rows: m, cols: n });
    }
    let mut rng = seeded(seed);
    let u = Matrix::new(m, r, normal_vec(&mut rng, m * r))?;
    let v = Matrix::new(r, n, normal_vec(&mut rng, r * n))?;
    let true_factors = FactorPair::new(u, v)?;
    let prod = true_factors.product();
    let mq = prod.map(f64::round_ties_even);
    Ok(QuantizedInstance {
        true_factors,
        m: prod,
        mq,
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InitKind {
    /// Truncated SVD of `Mq`.
    L2,
    /// Truncated SVD of the unrounded `M`.
    TrueM,
    /// Standard normal factors.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub trials: usize,
    pub init: InitKind,
    pub seed: u64,
    pub bcd: BcdOptions,
}

impl RecoveryConfig {
    pub fn new(rows: usize, cols: usize, rank: usize, trials: usize, init: InitKind, seed: u64) -> Self {
        Self {
            rows,
            cols,
            rank,
            trials,
            init,
            seed,
            bcd: BcdOptions {
                seed,
                rel_tol: RECOVERY_REL_TOL,
                ..BcdOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub init_error: f64,
    pub final_error: f64,
    pub sweeps: usize,
    pub success: bool,
    /// Only for rank one: whether `final_error` was proved optimal.
    pub certified: Option<bool>,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RecoveryConfig,
    pub runs: Vec<TrialRecord>,
    pub min_error: f64,
    pub mean_error: f64,
    pub max_error: f64,
    pub successes: usize,
    pub certified: Option<usize>,
    pub mean_sweeps: f64,
}

impl ExperimentReport {
    fn aggregate(config: RecoveryConfig, runs: Vec<TrialRecord>) -> Self {
        let errs = runs.iter().map(|r| r.final_error);
        let min_error = errs.clone().fold(f64::INFINITY, f64::min);
        let max_error = errs.clone().fold(f64::NEG_INFINITY, f64::max);
        let k = runs.len() as f64;
        let mean_error = errs.sum::<f64>() / k;
        let mean_sweeps = runs.iter().map(|r| r.sweeps as f64).sum::<f64>() / k;
        let successes = runs.iter().filter(|r| r.success).count();
        let certified = (config.rank == 1).then(|| runs.iter().filter(|r| r.certified == Some(true)).count());
        Self {
            config,
            runs,
            min_error,
            mean_error,
            max_error,
            successes,
            certified,
            mean_sweeps,
        }
    }
}

pub fn initial_factors(inst: &QuantizedInstance, rank: usize, init: InitKind) -> Result<FactorPair, HarnessError> {
    Ok(match init {
        InitKind::L2 => rank_r_l2_init(&inst.mq, rank, inst.seed)?,
        InitKind::TrueM => rank_r_l2_init(&inst.m, rank, inst.seed)?,
        InitKind::Random => {
            let (m, n) = inst.mq.shape();
            let mut rng = seeded(inst.seed ^ RANDOM_INIT_SALT);
            let u = Matrix::new(m, rank, normal_vec(&mut rng, m * rank))?;
            let v = Matrix::new(rank, n, normal_vec(&mut rng, rank * n))?;
            FactorPair::new(u, v)?
        }
    })
}

pub fn run_trial(config: &RecoveryConfig, trial: usize) -> Result<TrialRecord, HarnessError> {
    let start = Instant::now();
    let seed = trial_seed(config.seed, trial);
    let inst = gen_quantized(config.rows, config.cols, config.rank, seed)?;
    let mut init = initial_factors(&inst, config.rank, config.init)?;
    if config.bcd.nonnegative {
        let (u, v) = init.into_parts();
        init = FactorPair::new(u.map(f64::abs), v.map(f64::abs))?;
    }
    let init_error = residual_linf(&inst.mq, &init)?;
    let (_, rep) = bcd(&inst.mq, init, &config.bcd)?;
    let f = rep.final_error;
    let certified = if config.rank == 1 {
        // Below eps there is nothing left to certify: k < 0 is never feasible.
        Some(f < CERTIFY_EPS || certify(&inst.mq, f, CERTIFY_EPS)?)
    } else {
        None
    };
    Ok(TrialRecord {
        trial,
        seed,
        init_error,
        final_error: f,
        sweeps: rep.sweeps,
        success: f <= SUCCESS_THRESHOLD + SUCCESS_SLACK,
        certified,
        wall_time: start.elapsed(),
    })
}

/// Trials run concurrently; results are identical to a serial run.
pub fn run_recovery(config: &RecoveryConfig) -> Result<ExperimentReport, HarnessError> {
    if config.trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let runs = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentReport::aggregate(*config, runs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecantBench {
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// `histogram[k]` counts subproblems that took `k` intersections.
    pub histogram: Vec<u64>,
    pub mean_iterations: f64,
    pub max_iterations: u32,
    pub total_time: Duration,
}

pub fn bench_secant(m: usize, trials: usize, seed: u64) -> Result<SecantBench, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    if m == 0 {
        return Err(HarnessError::EmptyDimension);
    }
    let start = Instant::now();
    let counts: Vec<u32> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(trial_seed(seed, t));
            let c = normal_vec(&mut rng, m);
            let u = normal_vec(&mut rng, m);
            secant(&c, &u).iterations
        })
        .collect();
    let total_time = start.elapsed();
    let max_iterations = counts.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max_iterations as usize + 1];
    for &k in &counts {
        histogram[k as usize] += 1;
    }
    let mean_iterations = counts.iter().map(|&k| k as f64).sum::<f64>() / trials as f64;
    Ok(SecantBench {
        m,
        trials,
        seed,
        histogram,
        mean_iterations,
        max_iterations,
        total_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::linf_norm;

    #[test]
    fn quantized_instances_are_deterministic_and_rounded() {
        let a = gen_quantized(12, 9, 2, 7).unwrap();
        let b = gen_quantized(12, 9, 2, 7).unwrap();
        assert_eq!(a, b);
        assert!(linf_norm(&a.m.sub(&a.mq).unwrap()) <= 0.5);
        assert!(a.mq.as_slice().iter().all(|x| x.fract() == 0.0));
        assert_ne!(a, gen_quantized(12, 9, 2, 8).unwrap());
        assert!(gen_quantized(3, 2, 3, 0).is_err());
    }

    #[test]
    fn single_line_benchmark() {
        let b = bench_secant(1, 50, 3).unwrap();
        assert_eq!(b.max_iterations, 1);
        assert_eq!(b.histogram, vec![0, 50]);
    }

    #[test]
    fn small_benchmark_is_fast_to_converge() {
        let b = bench_secant(10, 2000, 1).unwrap();
        assert!(b.max_iterations <= 8, "{b:?}");
        assert_eq!(b.histogram.iter().sum::<u64>(), 2000);
    }

    #[test]
    fn recovery_is_reproducible_and_consistent() {
        let cfg = RecoveryConfig::new(30, 25, 1, 4, InitKind::L2, 11);
        let a = run_recovery(&cfg).unwrap();
        let b = run_recovery(&cfg).unwrap();
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(
                (x.final_error, x.sweeps, x.certified, x.seed),
                (y.final_error, y.sweeps, y.certified, y.seed)
            );
        }
        assert_eq!(a.successes, a.runs.iter().filter(|r| r.final_error <= 0.5 + 1e-9).count());
        assert_eq!(a.certified, Some(4));
    }

    #[test]
    fn random_and_nonnegative_inits_run() {
        let mut cfg = RecoveryConfig::new(10, 8, 2, 2, InitKind::Random, 5);
        assert!(run_recovery(&cfg).is_ok());
        cfg.bcd.nonnegative = true;
        let rep = run_recovery(&cfg).unwrap();
        assert!(rep.certified.is_none());
        cfg.trials = 0;
        assert!(matches!(run_recovery(&cfg), Err(HarnessError::NoTrials)));
    }
}
