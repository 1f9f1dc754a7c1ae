use std::fmt::Write as _;
use std::path::Path;

use super::{Solution, SolveStatus};
use crate::error::{Error, Result};
use crate::milp::MilpInstance;

/// Parses the plain solution format:
///
/// ```text
/// # comment
/// =status= optimal
/// =obj= 2400
/// =bound= 2398.5
/// build_solar_b1 3
/// ```
///
/// Unknown names and missing columns produce warnings; missing columns read
/// as zero. Without a `=status=` line the status is `optimal` when anything
/// was reported.
pub fn parse_solution_str(text: &str, m: &MilpInstance) -> Result<Solution> {
    let mut sol = Solution::empty(SolveStatus::Optimal, m.num_vars());
    let mut status = None;
    let mut seen = vec![false; m.num_vars()];
    let mut unknown = Vec::new();
    let err = |ln: usize, msg: String| Error::parse(format!("solution line {ln}"), msg);

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let (Some(key), Some(val), None) = (tok.next(), tok.next(), tok.next()) else {
            return Err(err(ln, format!("expected `<name> <value>`, got `{line}`")));
        };
        if key == "=status=" {
            status = Some(SolveStatus::parse(val).ok_or_else(|| err(ln, format!("unknown status `{val}`")))?);
            continue;
        }
        let v: f64 = val.parse().map_err(|_| err(ln, format!("bad number `{val}`")))?;
        if v.is_nan() {
            return Err(err(ln, "NaN value".into()));
        }
        match key {
            "=obj=" => sol.objective = Some(v),
            "=bound=" => sol.best_bound = Some(v),
            name => match m.find_var(name) {
                Some(j) => {
                    sol.values[j] = v;
                    seen[j] = true;
                }
                None => unknown.push(name.to_string()),
            },
        }
    }

    if !unknown.is_empty() {
        sol.warnings.push(format!(
            "{} unknown variable(s) ignored, first `{}`",
            unknown.len(),
            unknown[0]
        ));
    }
    let missing = seen.iter().filter(|s| !**s).count();
    let any_values = seen.iter().any(|s| *s);
    if missing > 0 && any_values {
        sol.warnings.push(format!("{missing} variable(s) missing from the solution, read as 0"));
    }
    if !any_values && m.num_vars() > 0 && sol.objective.is_some() {
        sol.warnings.push("solution file reports an objective but no variable values".into());
    }
    sol.status = match status {
        Some(s) => s,
        None if sol.objective.is_some() || any_values => SolveStatus::Optimal,
        None => SolveStatus::Error,
    };
    if sol.objective.is_none() && any_values && sol.status.has_solution() {
        sol.objective = Some(m.objective_value(&sol.values));
        sol.warnings.push("objective missing, recomputed from values".into());
    }
    Ok(sol)
}

pub fn parse_solution(path: &Path, m: &MilpInstance) -> Result<Solution> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution_str(&text, m)
}

/// Inverse of [`parse_solution_str`].
pub fn write_solution(sol: &Solution, m: &MilpInstance) -> String {
    let mut out = String::new();
    writeln!(out, "=status= {}", sol.status.as_str()).unwrap();
    if let Some(obj) = sol.objective {
        writeln!(out, "=obj= {obj}").unwrap();
    }
    if let Some(b) = sol.best_bound {
        writeln!(out, "=bound= {b}").unwrap();
    }
    for (v, x) in m.variables.iter().zip(&sol.values) {
        writeln!(out, "{} {x}", v.name).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::VarKind;

    fn inst() -> MilpInstance {
        let mut m = MilpInstance::new("t");
        m.add_var("x", 0.0, 5.0, VarKind::Continuous, 2.0, None);
        m.add_var("y", 0.0, 1.0, VarKind::Binary, 3.0, None);
        m
    }

    #[test]
    fn round_trip() {
        let m = inst();
        let sol = Solution {
            status: SolveStatus::FeasibleGap,
            objective: Some(7.0),
            best_bound: Some(6.5),
            values: vec![2.0, 1.0],
            wall_time: 0.0,
            warnings: vec![],
        };
        let back = parse_solution_str(&write_solution(&sol, &m), &m).unwrap();
        assert_eq!(back, sol);
    }

    #[test]
    fn missing_and_unknown() {
        let m = inst();
        let sol = parse_solution_str("# hi\n=obj= 4\nx 2\nzz 1\n", &m).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.values, vec![2.0, 0.0]);
        assert_eq!(sol.warnings.len(), 2);

        let only_obj = parse_solution_str("=obj= 4\n", &m).unwrap();
        assert_eq!(only_obj.warnings.len(), 1);
        assert_eq!(parse_solution_str("", &m).unwrap().status, SolveStatus::Error);
    }

    #[test]
    fn malformed_lines_report_position() {
        let m = inst();
        let e = parse_solution_str("x 1\ny one\n", &m).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(parse_solution_str("x 1 2\n", &m).is_err());
    }
}
