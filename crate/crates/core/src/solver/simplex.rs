//! Dense bounded-variable primal simplex.
//!
//! Every row `lo ≤ a·x ≤ hi` gets a logical variable `s = a·x` carrying the row
//! bounds, so the working problem is `min c·x` over box bounds with the logicals
//! as the initial basis. The tableau is kept in condensed form (basic rows ×
//! nonbasic columns) and updated by Jordan exchange, skipping zero entries of
//! the pivot row and column.
//!
//! Phase one minimizes the sum of bound violations of the basic variables
//! (composite pricing, re-derived each iteration), so the solver can restart
//! from any basis. The brute-force oracle relies on that to warm-start after
//! changing the values of fixed integer columns.
//!
//! Pricing is Dantzig's largest reduced cost with a Harris two-pass ratio test;
//! after a run of degenerate pivots it switches to Bland's rule until progress
//! resumes.

use crate::milp::MilpInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// `min c·x  s.t.  row_lower ≤ A x ≤ row_upper,  lower ≤ x ≤ upper`.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
}

impl From<&MilpInstance> for LpProblem {
    fn from(m: &MilpInstance) -> Self {
        Self {
            cost: m.variables.iter().map(|v| v.objective).collect(),
            lower: m.variables.iter().map(|v| v.lower).collect(),
            upper: m.variables.iter().map(|v| v.upper).collect(),
            rows: m.constraints.iter().map(|c| c.terms.clone()).collect(),
            row_lower: m.constraints.iter().map(|c| c.lower).collect(),
            row_upper: m.constraints.iter().map(|c| c.upper).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Basic(usize),
    Nonbasic(usize),
}

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 60;
const REFRESH_EVERY: usize = 100;
const PHASE_TWO_TOL_SCALE: f64 = 100.0;
/// Fraction of the feasibility tolerance the relaxed ratio test may use, so
/// a relaxed step never lands a basic variable in phase one.
const HARRIS_RELAX: f64 = 0.5;

pub struct Simplex {
    /// Structural columns.
    n: usize,
    m: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    slot: Vec<Slot>,
    /// Row-major `m × n`: `x_B = const − tab · x_N`.
    tab: Vec<f64>,
    /// Phase-two reduced costs of the nonbasic columns.
    d: Vec<f64>,
    opt_tol: f64,
    iterations: usize,
    max_iterations: usize,
    /// Widens the feasibility tolerance once phase two is reached.
    tol_scale: f64,
}

fn initial_value(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

impl Simplex {
    pub fn new(lp: &LpProblem) -> Self {
        let n = lp.cost.len();
        let m = lp.rows.len();
        let mut cost = lp.cost.clone();
        cost.resize(n + m, 0.0);
        let mut lower = lp.lower.clone();
        lower.extend_from_slice(&lp.row_lower);
        let mut upper = lp.upper.clone();
        upper.extend_from_slice(&lp.row_upper);

        let mut x: Vec<f64> = (0..n).map(|j| initial_value(lower[j], upper[j])).collect();
        x.resize(n + m, 0.0);
        let mut tab = vec![0.0; m * n];
        for (i, row) in lp.rows.iter().enumerate() {
            let mut s = 0.0;
            for &(j, a) in row {
                tab[i * n + j] -= a;
                s += a * x[j];
            }
            x[n + i] = s;
        }
        let max_abs_cost = lp.cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        Self {
            n,
            m,
            d: cost[..n].to_vec(),
            cost,
            lower,
            upper,
            x,
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            slot: (0..n).map(Slot::Nonbasic).chain((0..m).map(Slot::Basic)).collect(),
            tab,
            opt_tol: 1e-10 * max_abs_cost.max(10.0),
            iterations: 0,
            tol_scale: 1.0,
            max_iterations: 50_000 + 40 * (n + m),
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Structural values.
    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    /// Changes the bounds of a structural column, shifting the basic values if
    /// the column is nonbasic. The basis is kept.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        let was_upper = self.upper[j].is_finite() && self.x[j] == self.upper[j] && self.x[j] != self.lower[j];
        self.lower[j] = lo;
        self.upper[j] = hi;
        if let Slot::Nonbasic(p) = self.slot[j] {
            let target = if was_upper && hi.is_finite() {
                hi
            } else if !lo.is_finite() && !hi.is_finite() {
                self.x[j]
            } else {
                initial_value(lo, hi)
            };
            let delta = target - self.x[j];
            if delta != 0.0 {
                self.x[j] = target;
                for r in 0..self.m {
                    let a = self.tab[r * self.n + p];
                    if a != 0.0 {
                        self.x[self.basic[r]] -= a * delta;
                    }
                }
            }
        }
    }

    /// Recomputes the basic values from the nonbasic ones, discarding the
    /// round-off accumulated by incremental updates.
    fn refresh(&mut self) {
        let n = self.n;
        for r in 0..self.m {
            let row = &self.tab[r * n..(r + 1) * n];
            let v: f64 = row
                .iter()
                .zip(&self.nonbasic)
                .filter(|(a, _)| **a != 0.0)
                .map(|(a, &j)| -a * self.x[j])
                .sum();
            self.x[self.basic[r]] = v;
        }
    }

    fn feas_tol(&self, bound: f64) -> f64 {
        if bound.is_finite() {
            FEAS_TOL * self.tol_scale * bound.abs().max(1.0)
        } else {
            0.0
        }
    }

    /// Phase-one weight of each basic row: −1 below its lower bound, +1 above
    /// its upper bound.
    fn infeasible_rows(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (r, &v) in self.basic.iter().enumerate() {
            let (lo, hi, val) = (self.lower[v], self.upper[v], self.x[v]);
            if val < lo - self.feas_tol(lo) {
                out.push((r, -1.0));
            } else if val > hi + self.feas_tol(hi) {
                out.push((r, 1.0));
            }
        }
        out
    }

    /// Returns the entering column and its direction.
    fn price(&self, dd: &[f64], tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (p, &var) in self.nonbasic.iter().enumerate() {
            let (lo, hi, val) = (self.lower[var], self.upper[var], self.x[var]);
            if lo == hi {
                continue;
            }
            let dj = dd[p];
            // Nonbasic values sit exactly on a bound, so no tolerance here; a
            // range narrower than the feasibility tolerance still counts.
            let can_up = val < hi;
            let can_down = val > lo;
            let dir = if dj < -tol && can_up {
                1.0
            } else if dj > tol && can_down {
                -1.0
            } else {
                continue;
            };
            let score = dj.abs();
            let better = match best {
                None => true,
                Some((bp, _, bs)) => {
                    if bland {
                        var < self.nonbasic[bp]
                    } else {
                        score > bs
                    }
                }
            };
            if better {
                best = Some((p, dir, score));
            }
        }
        best.map(|(p, dir, _)| (p, dir))
    }

    /// Largest step before `x_B[r]` hits the bound it is moving toward, and
    /// that bound. Basics outside their bounds and moving away never block.
    fn block(&self, r: usize, rate: f64, relax: f64) -> Option<(f64, f64)> {
        let v = self.basic[r];
        let (lo, hi, val) = (self.lower[v], self.upper[v], self.x[v]);
        if rate > 0.0 {
            if val < lo - self.feas_tol(lo) {
                Some(((lo - val + relax * self.feas_tol(lo)) / rate, lo))
            } else if hi.is_finite() && val <= hi + self.feas_tol(hi) {
                Some((((hi - val).max(0.0) + relax * self.feas_tol(hi)) / rate, hi))
            } else {
                None
            }
        } else if val > hi + self.feas_tol(hi) {
            Some(((val - hi + relax * self.feas_tol(hi)) / -rate, hi))
        } else if lo.is_finite() && val >= lo - self.feas_tol(lo) {
            Some((((val - lo).max(0.0) + relax * self.feas_tol(lo)) / -rate, lo))
        } else {
            None
        }
    }

    pub fn solve(&mut self) -> LpStatus {
        let n = self.n;
        let mut degenerate = 0usize;
        self.tol_scale = 1.0;
        let mut dd = vec![0.0; n];
        loop {
            if self.iterations >= self.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.iterations % REFRESH_EVERY == 0 {
                self.refresh();
            }
            let infeasible = self.infeasible_rows();
            let phase_one = !infeasible.is_empty();
            if !phase_one {
                // Round-off of order FEAS_TOL must not send a feasible basis
                // back to phase one, where a tiny pivot can undo the last
                // phase-two pivot and the two phases cycle.
                self.tol_scale = PHASE_TWO_TOL_SCALE;
            }
            let tol = if phase_one {
                dd.iter_mut().for_each(|v| *v = 0.0);
                for &(r, w) in &infeasible {
                    let row = &self.tab[r * n..(r + 1) * n];
                    for (p, &a) in row.iter().enumerate() {
                        if a != 0.0 {
                            dd[p] -= w * a;
                        }
                    }
                }
                1e-9
            } else {
                dd.copy_from_slice(&self.d);
                self.opt_tol
            };
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((q, dir)) = self.price(&dd, tol, bland) else {
                return if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };
            self.iterations += 1;

            // Ratio test, Harris two-pass unless in Bland mode.
            let entering = self.nonbasic[q];
            let bound_step = if dir > 0.0 {
                self.upper[entering] - self.x[entering]
            } else {
                self.x[entering] - self.lower[entering]
            }
            .max(0.0);
            let rates: Vec<(usize, f64)> = (0..self.m)
                .filter_map(|r| {
                    let a = self.tab[r * n + q];
                    (a.abs() > PIVOT_TOL).then_some((r, -a * dir))
                })
                .collect();
            let mut leave: Option<(usize, f64, f64)> = None;
            if bland {
                for &(r, rate) in &rates {
                    if let Some((t, bound)) = self.block(r, rate, 0.0) {
                        let take = match leave {
                            None => true,
                            Some((lr, lt, _)) => {
                                t < lt || (t == lt && self.basic[r] < self.basic[lr])
                            }
                        };
                        if take {
                            leave = Some((r, t, bound));
                        }
                    }
                }
            } else {
                let relaxed = rates
                    .iter()
                    .filter_map(|&(r, rate)| self.block(r, rate, HARRIS_RELAX).map(|b| b.0))
                    .fold(f64::INFINITY, f64::min);
                let mut best_pivot = 0.0;
                for &(r, rate) in &rates {
                    if let Some((t, bound)) = self.block(r, rate, 0.0) {
                        if t <= relaxed && rate.abs() > best_pivot {
                            best_pivot = rate.abs();
                            leave = Some((r, t, bound));
                        }
                    }
                }
            }

            let step = leave.map_or(f64::INFINITY, |l| l.1.max(0.0));
            if bound_step <= step {
                if !bound_step.is_finite() {
                    return if phase_one {
                        LpStatus::Infeasible
                    } else {
                        LpStatus::Unbounded
                    };
                }
                // Bound flip; the basis is unchanged.
                self.x[entering] = if dir > 0.0 {
                    self.upper[entering]
                } else {
                    self.lower[entering]
                };
                for &(r, rate) in &rates {
                    self.x[self.basic[r]] += rate * bound_step;
                }
                degenerate = 0;
                continue;
            }
            let (r, _, bound) = leave.expect("finite step has a leaving row");
            if step > 1e-12 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            self.x[entering] += dir * step;
            for &(i, rate) in &rates {
                self.x[self.basic[i]] += rate * step;
            }
            let leaving = self.basic[r];
            self.x[leaving] = bound;
            self.pivot(r, q);
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let inv = 1.0 / self.tab[r * n + q];
        let mut prow: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.tab[r * n..(r + 1) * n];
            for (j, v) in row.iter_mut().enumerate() {
                if j == q {
                    *v = inv;
                } else if *v != 0.0 {
                    *v *= inv;
                    prow.push((j, *v));
                }
            }
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let a = self.tab[i * n + q];
            if a == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * n..(i + 1) * n];
            for &(j, pv) in &prow {
                let v = row[j] - a * pv;
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = -a * inv;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &(j, pv) in &prow {
                self.d[j] -= dq * pv;
            }
        }
        self.d[q] = -dq * inv;

        let entering = self.nonbasic[q];
        let leaving = self.basic[r];
        self.basic[r] = entering;
        self.nonbasic[q] = leaving;
        self.slot[entering] = Slot::Basic(r);
        self.slot[leaving] = Slot::Nonbasic(q);
    }
}

/// One-shot LP solve. Returns the status, objective and structural values.
pub fn solve_lp(lp: &LpProblem) -> (LpStatus, f64, Vec<f64>) {
    let mut s = Simplex::new(lp);
    let status = s.solve();
    (status, s.objective(), s.values().to_vec())
}
