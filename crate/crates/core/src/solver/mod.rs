//! MILP backends.
//!
//! The production path writes free MPS, runs an external solver through a
//! command template and reads back a plain `name value` solution file. The
//! [`OracleSolver`] enumerates every integer assignment and solves each
//! continuous restriction with the internal [`simplex`]; it is exact and
//! deterministic but only usable on desk-scale instances.

mod bruteforce;
mod external;
mod mps;
pub mod simplex;
mod solution;

use serde::{Deserialize, Serialize};

pub use bruteforce::{solve_bruteforce, OracleLimits};
pub use external::{solve_external, ExternalSolver, SOLVER_CMD_ENV};
pub use mps::{mps_string, read_mps, write_mps};
pub use solution::{parse_solution, parse_solution_str, write_solution};

use crate::error::Result;
use crate::milp::MilpInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Feasible incumbent, stopped on the gap criterion.
    FeasibleGap,
    TimeLimit,
    Infeasible,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, Self::Optimal | Self::FeasibleGap | Self::TimeLimit)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::FeasibleGap => "feasible-gap",
            Self::TimeLimit => "time-limit",
            Self::Infeasible => "infeasible",
            Self::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => Self::Optimal,
            "feasible-gap" | "feasible" => Self::FeasibleGap,
            "time-limit" => Self::TimeLimit,
            "infeasible" => Self::Infeasible,
            "error" => Self::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    /// Variable values in instance column order.
    pub values: Vec<f64>,
    pub wall_time: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Relative gap floor used when the objective is zero.
pub const GAP_EPS: f64 = 1e-10;

impl Solution {
    pub fn empty(status: SolveStatus, n: usize) -> Self {
        Self {
            status,
            objective: None,
            best_bound: None,
            values: vec![0.0; n],
            wall_time: 0.0,
            warnings: Vec::new(),
        }
    }

    /// `(objective − best_bound) / max(|objective|, ε)` when both are known.
    pub fn mip_gap(&self) -> Option<f64> {
        let (obj, bound) = (self.objective?, self.best_bound?);
        Some((obj - bound) / obj.abs().max(GAP_EPS))
    }

    pub fn value(&self, m: &MilpInstance, name: &str) -> Option<f64> {
        m.find_var(name).map(|j| self.values[j])
    }
}

/// Anything that can solve a [`MilpInstance`] to a relative gap within a time
/// limit in seconds.
pub trait MilpSolver: Sync {
    fn solve(&self, m: &MilpInstance, gap: f64, time_limit: f64) -> Result<Solution>;

    /// True when solutions are globally optimal (gap ignored).
    fn is_exact(&self) -> bool {
        false
    }
}

/// Internal exact backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleSolver {
    pub limits: OracleLimits,
}

impl MilpSolver for OracleSolver {
    fn solve(&self, m: &MilpInstance, _gap: f64, _time_limit: f64) -> Result<Solution> {
        solve_bruteforce(m, &self.limits)
    }

    fn is_exact(&self) -> bool {
        true
    }
}

impl MilpSolver for ExternalSolver {
    fn solve(&self, m: &MilpInstance, gap: f64, time_limit: f64) -> Result<Solution> {
        solve_external(m, self, gap, time_limit)
    }
}
