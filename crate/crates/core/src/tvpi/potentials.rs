//! Log-space difference constraints.
//!
//! A value var whose constraints all admit `v = 0` is set to zero. Otherwise
//! its sign is forced (some `lower > 0` or some `upper < 0`), and with
//! `w = |v| > 0`, `x_i = ln s_i`, `y_j = ln w_j` each inequality becomes
//!
//! ```text
//!     s_i a <= w_j   (a > 0)   ->   x_i - y_j <= -ln a
//!     w_j <= s_i b   (b > 0)   ->   y_j - x_i <=  ln b
//! ```
//!
//! while `w_j <= s_i b` with `b <= 0` is unsatisfiable. The system is feasible
//! iff the constraint graph has no negative cycle; Bellman–Ford potentials,
//! shifted so that `min x = 0`, give a witness with `s >= 1`.

use super::{Feasibility, LinearSystem, Witness};

/// Minimum improvement for a relaxation. Cycles lighter than this per edge are
/// treated as zero-weight, i.e. the answer is exact up to a relative factor of
/// about `exp(1e-13)` on each ratio `v_j / s_i`.
const RELAX_EPS: f64 = 1e-13;

#[derive(Clone, Copy, PartialEq)]
enum Orientation {
    Zero,
    Positive,
    Negative,
}

pub(super) fn solve(sys: &LinearSystem) -> Feasibility {
    let (ns, nv) = (sys.scale_vars(), sys.value_vars());
    let mut forced_pos = vec![false; nv];
    let mut forced_neg = vec![false; nv];
    for c in sys.constraints() {
        forced_pos[c.value] |= c.lower > 0.0;
        forced_neg[c.value] |= c.upper < 0.0;
    }
    let mut orient = Vec::with_capacity(nv);
    for j in 0..nv {
        orient.push(match (forced_pos[j], forced_neg[j]) {
            (true, true) => return Feasibility::Infeasible,
            (true, false) => Orientation::Positive,
            (false, true) => Orientation::Negative,
            (false, false) => Orientation::Zero,
        });
    }

    // Node ids: scale vars 0..ns, value vars ns..ns+nv. Edge (from, to, w)
    // encodes dist[to] <= dist[from] + w.
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * sys.constraints().len());
    for c in sys.constraints() {
        let (lo, hi) = match orient[c.value] {
            Orientation::Zero => continue,
            Orientation::Positive => (c.lower, c.upper),
            Orientation::Negative => (-c.upper, -c.lower),
        };
        let (x, y) = (c.scale, ns + c.value);
        if lo > 0.0 {
            edges.push((y, x, -lo.ln()));
        }
        if hi > 0.0 {
            edges.push((x, y, hi.ln()));
        } else {
            return Feasibility::Infeasible;
        }
    }

    let nodes = ns + nv;
    let mut dist = vec![0.0f64; nodes];
    let mut settled = false;
    for _pass in 0..=nodes {
        let mut changed = false;
        for &(from, to, w) in &edges {
            let cand = dist[from] + w;
            if cand < dist[to] - RELAX_EPS {
                dist[to] = cand;
                changed = true;
            }
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled {
        return Feasibility::Infeasible;
    }

    let shift = dist[..ns].iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let s: Vec<f64> = dist[..ns].iter().map(|x| (x - shift).exp()).collect();
    let v: Vec<f64> = (0..nv)
        .map(|j| {
            let w = (dist[ns + j] - shift).exp();
            match orient[j] {
                Orientation::Zero => 0.0,
                Orientation::Positive => w,
                Orientation::Negative => -w,
            }
        })
        .collect();
    let max_violation = sys.max_violation(&s, &v);
    Feasibility::Feasible(Witness { s, v, max_violation })
}
