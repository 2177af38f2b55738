//! Dense phase-1 simplex: minimize the largest violation `t`.
//!
//! Columns: `s'_a = s_a - 1 >= 0`, `v⁺_b`, `v⁻_b`, `t`, then one slack per row.
//! Rows, for each constraint:
//!
//! ```text
//!      v_b - hi s'_a - t <=  hi
//!     -v_b + lo s'_a - t <= -lo
//! ```
//!
//! plus `s'_a <= MAX_SCALE - 1`. A single pivot on `t` in the row with the most
//! negative right-hand side makes the slack basis feasible; Bland's rule then
//! drives `t` to its minimum without cycling.

use super::{Feasibility, LinearSystem, Witness, MAX_SCALE};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    /// Row-major, `cols + 1` entries per row; the last is the right-hand side.
    a: Vec<f64>,
    rows: usize,
    width: usize,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.width + self.width - 1]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.at(pr, pc);
        for x in &mut self.a[pr * w..(pr + 1) * w] {
            *x /= p;
        }
        let pivot_row: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                for (x, y) in self.a[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (x, y) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
        }
        self.basis[pr] = pc;
    }
}

pub(super) fn solve(sys: &LinearSystem, tol: f64) -> Feasibility {
    let (ns, nv) = (sys.scale_vars(), sys.value_vars());
    if sys.constraints().is_empty() {
        return Feasibility::Feasible(Witness {
            s: vec![1.0; ns],
            v: vec![0.0; nv],
            max_violation: 0.0,
        });
    }
    let t_col = ns + 2 * nv;
    let structural = t_col + 1;
    let rows = 2 * sys.constraints().len() + ns;
    let width = structural + rows + 1;
    let mut a = vec![0.0; rows * width];
    let mut put = |r: usize, c: usize, x: f64| a[r * width + c] = x;

    let mut r = 0;
    for c in sys.constraints() {
        let (sa, vp, vm) = (c.scale, ns + c.value, ns + nv + c.value);
        put(r, vp, 1.0);
        put(r, vm, -1.0);
        put(r, sa, -c.upper);
        put(r, t_col, -1.0);
        put(r, width - 1, c.upper);
        r += 1;
        put(r, vp, -1.0);
        put(r, vm, 1.0);
        put(r, sa, c.lower);
        put(r, t_col, -1.0);
        put(r, width - 1, -c.lower);
        r += 1;
    }
    for sa in 0..ns {
        put(r, sa, 1.0);
        put(r, width - 1, MAX_SCALE - 1.0);
        r += 1;
    }
    for r in 0..rows {
        put(r, structural + r, 1.0);
    }

    // Maximize -t; obj holds reduced costs of the maximization form.
    let mut obj = vec![0.0; width];
    obj[t_col] = 1.0;
    let mut tab = Tableau {
        a,
        rows,
        width,
        obj,
        basis: (structural..structural + rows).collect(),
    };

    let worst = (0..rows)
        .min_by(|&x, &y| tab.rhs(x).total_cmp(&tab.rhs(y)))
        .expect("at least one row");
    if tab.rhs(worst) < 0.0 {
        tab.pivot(worst, t_col);
    }

    for _ in 0..MAX_PIVOTS {
        // Bland: lowest-index improving column.
        let Some(enter) = (0..width - 1).find(|&c| tab.obj[c] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let coef = tab.at(r, enter);
            if coef > PIVOT_EPS {
                let ratio = tab.rhs(r) / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, br)) => {
                        if ratio < br - PIVOT_EPS || (ratio <= br + PIVOT_EPS && tab.basis[r] < tab.basis[best]) {
                            Some((r, ratio))
                        } else {
                            Some((best, br))
                        }
                    }
                };
            }
        }
        match leave {
            Some((r, _)) => tab.pivot(r, enter),
            // Only zero-cost directions can be unbounded; t is bounded below.
            None => break,
        }
    }

    let mut x = vec![0.0; structural];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < structural {
            x[b] = tab.rhs(r).max(0.0);
        }
    }
    if x[t_col] > tol {
        return Feasibility::Infeasible;
    }
    let s: Vec<f64> = x[..ns].iter().map(|sp| 1.0 + sp).collect();
    let v: Vec<f64> = (0..nv).map(|b| x[ns + b] - x[ns + nv + b]).collect();
    let max_violation = sys.max_violation(&s, &v);
    Feasibility::Feasible(Witness { s, v, max_violation })
}
