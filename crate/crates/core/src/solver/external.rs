use std::fs::File;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{parse_solution, write_mps, Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::milp::MilpInstance;

/// Environment variable holding the default command template.
pub const SOLVER_CMD_ENV: &str = "GRIDFOLD_SOLVER_CMD";

/// A shell command template with `{mps}`, `{sol}`, `{gap}` and `{timelimit}`
/// placeholders, e.g. `highs_solve.py {mps} {sol} {gap} {timelimit}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub cmd: String,
}

impl ExternalSolver {
    pub fn new(cmd: impl Into<String>) -> Result<Self> {
        let cmd = cmd.into();
        for p in ["{mps}", "{sol}"] {
            if !cmd.contains(p) {
                return Err(Error::Config(format!("solver command lacks the {p} placeholder")));
            }
        }
        Ok(Self { cmd })
    }

    pub fn from_env() -> Option<Result<Self>> {
        std::env::var(SOLVER_CMD_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(Self::new)
    }

    pub fn render(&self, mps: &Path, sol: &Path, gap: f64, time_limit: f64) -> String {
        let limit = if time_limit.is_finite() { format!("{time_limit}") } else { "inf".into() };
        self.cmd
            .replace("{mps}", &quote(mps))
            .replace("{sol}", &quote(sol))
            .replace("{gap}", &format!("{gap}"))
            .replace("{timelimit}", &limit)
    }
}

fn quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

/// Extra wall time granted beyond the solver's own limit before it is killed.
fn grace(time_limit: f64) -> f64 {
    (0.1 * time_limit).max(10.0)
}

fn tail(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap_or_default();
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(5)..].join(" | ")
}

/// Writes the instance to a fresh temp directory, runs the command through
/// `sh -c` and reads back the solution file. The directory is removed on
/// success and kept (and named in the error) on failure.
pub fn solve_external(m: &MilpInstance, solver: &ExternalSolver, gap: f64, time_limit: f64) -> Result<Solution> {
    let start = Instant::now();
    let dir = tempfile::Builder::new()
        .prefix("gridfold-")
        .tempdir()
        .map_err(|e| Error::Solver(format!("cannot create temp dir: {e}")))?;
    let mps = dir.path().join("model.mps");
    let sol = dir.path().join("model.sol");
    let log = dir.path().join("solver.log");
    write_mps(m, &mps)?;
    let cmd = solver.render(&mps, &sol, gap, time_limit);
    log::debug!("running solver: {cmd}");

    let out = File::create(&log).map_err(|e| Error::io(&log, e))?;
    let err = out.try_clone().map_err(|e| Error::io(&log, e))?;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(out)
        .stderr(err)
        .spawn()
        .map_err(|e| Error::Solver(format!("cannot start solver: {e}")))?;

    let deadline = time_limit.is_finite().then(|| Duration::from_secs_f64(time_limit + grace(time_limit)));
    let mut timed_out = false;
    let exit = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) => {}
            Err(e) => return Err(Error::Solver(format!("waiting for solver: {e}"))),
        }
        if deadline.is_some_and(|d| start.elapsed() > d) {
            let _ = child.kill();
            let _ = child.wait();
            timed_out = true;
            break None;
        }
        std::thread::sleep(Duration::from_millis(10));
    };

    let fail = |msg: String| {
        let kept = dir.path().to_path_buf();
        std::mem::forget(dir);
        Error::Solver(format!("{msg} (files kept in {})", kept.display()))
    };

    let mut solution = if sol.exists() {
        match parse_solution(&sol, m) {
            Ok(s) => s,
            Err(e) if !timed_out => return Err(fail(format!("unparsable solution: {e}"))),
            Err(_) => Solution::empty(SolveStatus::TimeLimit, m.num_vars()),
        }
    } else if timed_out {
        Solution::empty(SolveStatus::TimeLimit, m.num_vars())
    } else {
        let code = exit.and_then(|s| s.code());
        return Err(fail(format!("solver wrote no solution (exit {code:?}): {}", tail(&log))));
    };
    if timed_out {
        solution.status = SolveStatus::TimeLimit;
        solution.warnings.push("solver killed after exceeding its time limit".into());
    } else if let Some(status) = exit.filter(|s| !s.success()) {
        if solution.status.has_solution() {
            solution.warnings.push(format!("solver exited with {status}"));
        } else {
            return Err(fail(format!("solver exited with {status}: {}", tail(&log))));
        }
    }
    solution.wall_time = start.elapsed().as_secs_f64();
    Ok(solution)
}
