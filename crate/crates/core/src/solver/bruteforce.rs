use std::time::Instant;

use super::simplex::{LpProblem, LpStatus, Simplex};
use super::{Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::milp::MilpInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest number of integer assignments enumerated.
    pub max_lattice: u64,
    pub max_continuous: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_lattice: 4096,
            max_continuous: 50_000,
        }
    }
}

/// Relative margin by which a later lattice point must improve on the
/// incumbent; earlier points win ties.
const IMPROVE_TOL: f64 = 1e-9;

fn solve_point(lp: &LpProblem, ints: &[usize], point: &[i64]) -> (LpStatus, Simplex) {
    let mut s = Simplex::new(lp);
    for (&j, &v) in ints.iter().zip(point) {
        s.set_bounds(j, v as f64, v as f64);
    }
    let status = s.solve();
    (status, s)
}

/// Global optimum by exhaustive enumeration of the integer lattice, each
/// continuous restriction solved by the internal simplex. Consecutive lattice
/// points reuse the previous basis; the winner is re-solved from scratch.
pub fn solve_bruteforce(m: &MilpInstance, limits: &OracleLimits) -> Result<Solution> {
    m.validate()?;
    let start = Instant::now();
    let ints = m.integer_vars();
    let lattice = m
        .lattice_size()
        .ok_or_else(|| Error::Solver("integer variable with an infinite bound".into()))?;
    if lattice > limits.max_lattice {
        return Err(Error::Solver(format!(
            "integer lattice of {lattice} points exceeds the oracle limit {}",
            limits.max_lattice
        )));
    }
    let continuous = m.num_vars() - ints.len();
    if continuous > limits.max_continuous {
        return Err(Error::Solver(format!(
            "{continuous} continuous variables exceed the oracle limit {}",
            limits.max_continuous
        )));
    }
    let ranges: Vec<(i64, i64)> = ints
        .iter()
        .map(|&j| {
            let v = &m.variables[j];
            ((v.lower - 1e-9).ceil() as i64, (v.upper + 1e-9).floor() as i64)
        })
        .collect();
    if lattice == 0 {
        let mut sol = Solution::empty(SolveStatus::Infeasible, m.num_vars());
        sol.wall_time = start.elapsed().as_secs_f64();
        return Ok(sol);
    }

    let lp = LpProblem::from(m);
    let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut simplex = Simplex::new(&lp);
    for (&j, &v) in ints.iter().zip(&point) {
        simplex.set_bounds(j, v as f64, v as f64);
    }
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        let mut status = simplex.solve();
        if status == LpStatus::IterationLimit {
            let (s, fresh) = solve_point(&lp, &ints, &point);
            status = s;
            simplex = fresh;
        }
        match status {
            LpStatus::Optimal => {
                let obj = simplex.objective();
                let improves = match &best {
                    None => true,
                    Some((b, _)) => obj < b - IMPROVE_TOL * b.abs().max(1.0),
                };
                if improves {
                    best = Some((obj, point.clone()));
                }
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => return Err(Error::Solver("LP relaxation is unbounded".into())),
            LpStatus::IterationLimit => {
                return Err(Error::Solver("simplex iteration limit reached".into()));
            }
        }
        // Odometer step; the first integer column turns fastest.
        let mut k = 0;
        loop {
            if k == point.len() {
                return finish(m, &lp, &ints, best, start);
            }
            if point[k] < ranges[k].1 {
                point[k] += 1;
                let v = point[k] as f64;
                simplex.set_bounds(ints[k], v, v);
                break;
            }
            point[k] = ranges[k].0;
            let v = point[k] as f64;
            simplex.set_bounds(ints[k], v, v);
            k += 1;
        }
    }
}

fn finish(
    m: &MilpInstance,
    lp: &LpProblem,
    ints: &[usize],
    best: Option<(f64, Vec<i64>)>,
    start: Instant,
) -> Result<Solution> {
    let Some((_, point)) = best else {
        let mut sol = Solution::empty(SolveStatus::Infeasible, m.num_vars());
        sol.wall_time = start.elapsed().as_secs_f64();
        return Ok(sol);
    };
    let (status, s) = solve_point(lp, ints, &point);
    if status != LpStatus::Optimal {
        return Err(Error::Solver(format!("re-solve of the best assignment ended {status:?}")));
    }
    let mut values = s.values().to_vec();
    for (&j, &v) in ints.iter().zip(&point) {
        values[j] = v as f64;
    }
    let objective = m.objective_value(&values);
    Ok(Solution {
        status: SolveStatus::Optimal,
        objective: Some(objective),
        best_bound: Some(objective),
        values,
        wall_time: start.elapsed().as_secs_f64(),
        warnings: Vec::new(),
    })
}
