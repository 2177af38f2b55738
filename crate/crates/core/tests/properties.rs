mod common;

use proptest::prelude::*;

use linf_lra::bcd::{bcd, secant, BcdOptions};
use linf_lra::harness::gen_quantized;
use linf_lra::linalg::{linf_norm, rank_r_l2_init, residual_linf, FactorPair, Matrix};
use linf_lra::rank_one::{decide, Answer};
use linf_lra::reductions::{graph_to_matrix, nae_to_graph, Literal, NaeInstance};
use linf_lra::rng::{normal, normal_vec, seeded};
use linf_lra::signgraph::build_threshold_graph;
use linf_lra::tvpi::{self, Constraint, Feasibility, LinearSystem, Method};
use rand::Rng;

use common::{brute_decide, brute_secant, coarse_matrix, fm_feasible, gaussian_matrix};

fn one_d_problem(m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seeded(seed);
    let c = normal_vec(&mut rng, m);
    let u = (0..m)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { normal(&mut rng) })
        .collect();
    (c, u)
}

fn dyadic(rng: &mut linf_lra::rng::SeededRng) -> f64 {
    rng.random_range(-12i32..=12) as f64 / 4.0
}

fn random_system(seed: u64) -> LinearSystem {
    let mut rng = seeded(seed);
    let ns = rng.random_range(1..=3);
    let nv = rng.random_range(1..=3);
    let count = rng.random_range(1..=8);
    let cons = (0..count)
        .map(|_| {
            let lower = dyadic(&mut rng);
            let width = rng.random_range(0..=6) as f64 / 4.0;
            Constraint {
                scale: rng.random_range(0..ns),
                value: rng.random_range(0..nv),
                lower,
                upper: lower + width,
            }
        })
        .collect();
    LinearSystem::new(ns, nv, cons).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn secant_matches_brute_force(m in 1usize..=50, seed in any::<u64>()) {
        let (c, u) = one_d_problem(m, seed);
        let s = secant(&c, &u);
        let b = brute_secant(&c, &u);
        prop_assert!((s.value - b).abs() <= 1e-10 * b.abs().max(1.0), "secant {} brute {}", s.value, b);
        prop_assert!(s.iterations as usize <= m);
        if let Some((i, j)) = s.active {
            for k in [i, j] {
                prop_assert!(((c[k] - u[k] * s.value).abs() - s.objective).abs() <= 1e-10 * (1.0 + s.objective));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decide_matches_brute_force(short in 1usize..=3, long in 1usize..=5, flip in any::<bool>(), t in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = coarse_matrix(&mut rng, short, long);
        let m = if flip { m.transpose() } else { m };
        let k = t * linf_norm(&m);
        let d = decide(&m, k).unwrap();
        prop_assert_eq!(d.is_yes(), brute_decide(&m, k));
        if let Some(w) = &d.witness {
            prop_assert!(residual_linf(&m, w).unwrap() <= k + tvpi::default_tolerance(&m));
        }
    }

    #[test]
    fn decide_is_transpose_symmetric_and_monotone(rows in 1usize..=4, cols in 1usize..=4, t in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = coarse_matrix(&mut rng, rows, cols);
        let k = t * linf_norm(&m);
        let a = decide(&m, k).unwrap();
        prop_assert_eq!(a.answer, decide(&m.transpose(), k).unwrap().answer);
        if a.is_yes() {
            prop_assert!(decide(&m, k * 1.1 + 1e-9).unwrap().is_yes());
        } else {
            prop_assert_eq!(decide(&m, k * 0.9).unwrap().answer, Answer::No);
        }
    }

    #[test]
    fn nonnegative_shortcut(rows in 1usize..=5, cols in 1usize..=5, t in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = coarse_matrix(&mut rng, rows, cols).map(f64::abs);
        let k = t * linf_norm(&m);
        let d = decide(&m, k).unwrap();
        prop_assert_eq!(d.patterns_tried, 1);
        if rows.min(cols) <= 3 {
            prop_assert_eq!(d.is_yes(), brute_decide(&m, k));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tvpi_matches_fourier_motzkin(seed in any::<u64>()) {
        let sys = random_system(seed);
        let exact = fm_feasible(&sys);
        for method in [Method::Potentials, Method::Simplex] {
            match tvpi::solve_feasibility_with(&sys, 1e-9, method) {
                Feasibility::Feasible(w) => {
                    prop_assert!(exact, "{method:?} feasible, oracle infeasible: {sys:?}");
                    prop_assert!(w.max_violation <= 1e-9);
                    prop_assert!(w.s.iter().all(|&s| s >= 1.0 - 1e-12));
                }
                Feasibility::Infeasible => prop_assert!(!exact, "{method:?} infeasible, oracle feasible: {sys:?}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn bcd_history_is_monotone(rows in 2usize..=12, cols in 2usize..=12, r in 1usize..=3, nonnegative in any::<bool>(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let m = gaussian_matrix(&mut rng, rows, cols);
        let r = r.min(rows).min(cols);
        let init = if nonnegative {
            FactorPair::new(gaussian_matrix(&mut rng, rows, r).map(f64::abs), gaussian_matrix(&mut rng, r, cols).map(f64::abs)).unwrap()
        } else {
            rank_r_l2_init(&m, r, seed).unwrap()
        };
        let opts = BcdOptions { nonnegative, ..Default::default() };
        let (f, rep) = bcd(&m, init, &opts).unwrap();
        let slack = 1e-12 * linf_norm(&m);
        for w in rep.error_history.windows(2) {
            prop_assert!(w[1] <= w[0] + slack, "{:?}", rep.error_history);
        }
        prop_assert!((residual_linf(&m, &f).unwrap() - rep.final_error).abs() <= slack);
        if nonnegative {
            prop_assert!(f.is_nonnegative());
        }
    }

    #[test]
    fn quantization_error_is_at_most_half(rows in 1usize..=20, cols in 1usize..=20, r in 1usize..=4, seed in any::<u64>()) {
        let r = r.min(rows).min(cols);
        let q = gen_quantized(rows, cols, r, seed).unwrap();
        prop_assert!(linf_norm(&q.m.sub(&q.mq).unwrap()) <= 0.5);
        prop_assert!(q.mq.as_slice().iter().all(|x| x.fract() == 0.0));
    }

    #[test]
    fn reduction_matrix_structure(nx in 1usize..=4, clauses in prop::collection::vec((0usize..8, 0usize..8, 0usize..8), 0..4)) {
        let lit = |x: usize| if x.is_multiple_of(2) { Literal::pos(x / 2 % nx) } else { Literal::neg(x / 2 % nx) };
        let inst = NaeInstance::new(nx, clauses.iter().map(|&(a, b, c)| [lit(a), lit(b), lit(c)]).collect()).unwrap();
        let g = nae_to_graph(&inst);
        let (m, k) = graph_to_matrix(&g);
        let n = g.vertex_count();
        prop_assert_eq!(n, 2 * nx + 3 * clauses.len());
        let pairs: std::collections::HashSet<(usize, usize)> = g.pairs().iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        let edges: std::collections::HashSet<(usize, usize)> = g.edges().iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (m[(i, j)], m[(j, i)]);
                if i == j {
                    prop_assert_eq!(x, 2.0);
                } else {
                    prop_assert_eq!(x == -1.0 && y == -1.0, pairs.contains(&(i, j)));
                    prop_assert_eq!(x * y == -1.0, edges.contains(&(i, j)));
                }
            }
        }
        prop_assert_eq!(build_threshold_graph(&m, k).component_count(), n);
    }
}

#[test]
fn exact_rank_one_is_always_yes_at_zero() {
    for seed in 0..20 {
        let mut rng = seeded(seed);
        let u = normal_vec(&mut rng, 4);
        let v = normal_vec(&mut rng, 3);
        let m = Matrix::from_fn(4, 3, |i, j| u[i] * v[j]);
        assert!(decide(&m, 1e-9).unwrap().is_yes());
    }
}

#[test]
fn random_systems_cover_both_outcomes() {
    let feasible = (0..100).filter(|&s| fm_feasible(&random_system(s))).count();
    assert!((10..=90).contains(&feasible), "{feasible}/100 feasible");
}

#[test]
fn random_decisions_cover_both_outcomes() {
    let yes = (0..100)
        .filter(|&s| {
            let mut rng = seeded(s);
            let m = coarse_matrix(&mut rng, 3, 4);
            let k = 0.5 * linf_norm(&m);
            decide(&m, k).unwrap().is_yes()
        })
        .count();
    assert!((5..=95).contains(&yes), "{yes}/100 yes");
}
