use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::milp::{MilpInstance, VarKind};

const OBJ_ROW: &str = "COST";
const MAX_NAME: usize = 255;

fn check_name(kind: &str, name: &str) -> Result<()> {
    if name.is_empty() || name.len() > MAX_NAME || name.chars().any(char::is_whitespace) || name.starts_with('$') {
        return Err(Error::Model(format!("{kind} name `{name}` is not a valid MPS name")));
    }
    Ok(())
}

/// Shortest round-trip decimal; exponent form outside a readable range.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Free-format MPS text for a minimization instance. Columns appear in
/// declaration order and rows in constraint order, so equal instances give
/// byte-identical output.
pub fn mps_string(m: &MilpInstance) -> Result<String> {
    m.validate()?;
    check_name("instance", if m.name.is_empty() { "gridfold" } else { &m.name })?;
    for v in &m.variables {
        check_name("variable", &v.name)?;
    }
    for c in &m.constraints {
        check_name("constraint", &c.name)?;
        if c.name == OBJ_ROW {
            return Err(Error::Model(format!("constraint name `{OBJ_ROW}` is reserved")));
        }
        if c.lower > c.upper {
            return Err(Error::Model(format!("constraint `{}` has lower > upper", c.name)));
        }
    }

    // Column-major copy; duplicate entries in a row are summed.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.num_vars()];
    for (i, c) in m.constraints.iter().enumerate() {
        for &(j, a) in &c.terms {
            match cols[j].last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => cols[j].push((i, a)),
            }
        }
    }

    let mut out = String::new();
    let name = if m.name.is_empty() { "gridfold" } else { &m.name };
    writeln!(out, "NAME {name}").unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N {OBJ_ROW}").unwrap();
    for c in &m.constraints {
        let sense = match (c.lower.is_finite(), c.upper.is_finite()) {
            _ if c.lower == c.upper => "E",
            (_, true) => "L",
            (true, false) => "G",
            (false, false) => "N",
        };
        writeln!(out, " {sense} {}", c.name).unwrap();
    }
    if m.variables.is_empty() {
        out.push_str("ENDATA\n");
        return Ok(out);
    }

    writeln!(out, "COLUMNS").unwrap();
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in m.variables.iter().enumerate() {
        let int = v.kind.is_integral();
        if int != in_int {
            let tag = if int { "INTORG" } else { "INTEND" };
            writeln!(out, " MARKER{marker} 'MARKER' '{tag}'").unwrap();
            marker += 1;
            in_int = int;
        }
        if v.objective != 0.0 || cols[j].iter().all(|&(_, a)| a == 0.0) {
            writeln!(out, " {} {OBJ_ROW} {}", v.name, num(v.objective)).unwrap();
        }
        for &(i, a) in &cols[j] {
            if a != 0.0 {
                writeln!(out, " {} {} {}", v.name, m.constraints[i].name, num(a)).unwrap();
            }
        }
    }
    if in_int {
        writeln!(out, " MARKER{marker} 'MARKER' 'INTEND'").unwrap();
    }

    let mut rhs = String::new();
    let mut ranges = String::new();
    for c in &m.constraints {
        let (lo, hi) = (c.lower, c.upper);
        let value = if lo == hi || hi.is_finite() {
            hi
        } else if lo.is_finite() {
            lo
        } else {
            0.0
        };
        if value != 0.0 {
            writeln!(rhs, " RHS {} {}", c.name, num(value)).unwrap();
        }
        if lo != hi && lo.is_finite() && hi.is_finite() {
            writeln!(ranges, " RNG {} {}", c.name, num(hi - lo)).unwrap();
        }
    }
    out.push_str("RHS\n");
    out.push_str(&rhs);
    if !ranges.is_empty() {
        out.push_str("RANGES\n");
        out.push_str(&ranges);
    }

    let mut bounds = String::new();
    for v in &m.variables {
        let n = &v.name;
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            writeln!(bounds, " FX BND {n} {}", num(lo)).unwrap();
            continue;
        }
        let explicit = v.kind.is_integral();
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(bounds, " FR BND {n}").unwrap(),
            (false, true) => {
                writeln!(bounds, " MI BND {n}").unwrap();
                writeln!(bounds, " UP BND {n} {}", num(hi)).unwrap();
            }
            (true, hi_finite) => {
                if explicit || lo != 0.0 || (hi_finite && hi < 0.0) {
                    writeln!(bounds, " LO BND {n} {}", num(lo)).unwrap();
                }
                if hi_finite {
                    writeln!(bounds, " UP BND {n} {}", num(hi)).unwrap();
                } else if explicit {
                    writeln!(bounds, " PL BND {n}").unwrap();
                }
            }
        }
    }
    if !bounds.is_empty() {
        out.push_str("BOUNDS\n");
        out.push_str(&bounds);
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

pub fn write_mps(m: &MilpInstance, path: &Path) -> Result<()> {
    let text = mps_string(m)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(format!("MPS line {line}"), format!("bad number `{tok}`")))
}

/// Reads free MPS as written by [`mps_string`] (and the common subset other
/// tools emit). Only the first `N` row is kept as the objective.
pub fn read_mps(text: &str) -> Result<MilpInstance> {
    #[derive(PartialEq)]
    enum Sec {
        None,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
    }
    let mut m = MilpInstance::new("");
    let mut sec = Sec::None;
    let mut obj: Option<String> = None;
    let mut row_index = std::collections::HashMap::new();
    let mut senses: Vec<char> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut range: Vec<Option<f64>> = Vec::new();
    let mut in_int = false;
    let mut bounded = std::collections::HashSet::new();
    let mut terms: Vec<Vec<(crate::milp::VarId, f64)>> = Vec::new();
    let err = |line: usize, msg: String| Error::parse(format!("MPS line {line}"), msg);

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            sec = match tok[0] {
                "NAME" => {
                    m.name = tok.get(1).unwrap_or(&"").to_string();
                    Sec::None
                }
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "RANGES" => Sec::Ranges,
                "BOUNDS" => Sec::Bounds,
                "ENDATA" => break,
                other => return Err(err(ln, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match sec {
            Sec::Rows => {
                let [sense, name] = tok[..] else {
                    return Err(err(ln, "expected `<sense> <row>`".into()));
                };
                if sense == "N" {
                    if obj.is_none() {
                        obj = Some(name.to_string());
                    }
                    continue;
                }
                let s = sense.chars().next().unwrap();
                if !matches!(s, 'L' | 'G' | 'E') {
                    return Err(err(ln, format!("unknown row sense `{sense}`")));
                }
                row_index.insert(name.to_string(), senses.len());
                senses.push(s);
                rhs.push(0.0);
                range.push(None);
                terms.push(Vec::new());
                m.add_constraint(name, Vec::new(), 0.0, 0.0);
            }
            Sec::Columns => {
                if tok.len() >= 3 && tok[1] == "'MARKER'" {
                    in_int = tok[2] == "'INTORG'";
                    continue;
                }
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(err(ln, "expected `<col> <row> <value> [<row> <value>]`".into()));
                }
                let col = match m.var_index(tok[0]) {
                    Some(j) => crate::milp::VarId(j),
                    None => {
                        let kind = if in_int { VarKind::Integer } else { VarKind::Continuous };
                        m.add_var(tok[0], 0.0, f64::INFINITY, kind, 0.0, None)
                    }
                };
                for pair in tok[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if Some(pair[0]) == obj.as_deref() {
                        m.variables[col.0].objective = v;
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        terms[i].push((col, v));
                    }
                    // Entries in extra free rows are dropped.
                }
            }
            Sec::Rhs | Sec::Ranges => {
                let pairs = if tok.len() % 2 == 1 { &tok[1..] } else { &tok[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(ln, "dangling entry".into()));
                    }
                    let v = parse_num(pair[1], ln)?;
                    if let Some(&i) = row_index.get(pair[0]) {
                        if sec == Sec::Rhs {
                            rhs[i] = v;
                        } else {
                            range[i] = Some(v);
                        }
                    }
                }
            }
            Sec::Bounds => {
                if tok.len() < 3 {
                    return Err(err(ln, "short bound entry".into()));
                }
                let j = m
                    .var_index(tok[2])
                    .ok_or_else(|| err(ln, format!("unknown column `{}`", tok[2])))?;
                let value = tok.get(3).map(|t| parse_num(t, ln)).transpose()?;
                let need = || value.ok_or_else(|| err(ln, "bound value missing".into()));
                let v = &mut m.variables[j];
                bounded.insert(j);
                match tok[0] {
                    "UP" => v.upper = need()?,
                    "LO" => v.lower = need()?,
                    "FX" => {
                        v.lower = need()?;
                        v.upper = v.lower;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "BV" => {
                        v.kind = VarKind::Binary;
                        v.lower = 0.0;
                        v.upper = 1.0;
                    }
                    "LI" => {
                        v.kind = VarKind::Integer;
                        v.lower = need()?;
                    }
                    "UI" => {
                        v.kind = VarKind::Integer;
                        v.upper = need()?;
                    }
                    other => return Err(err(ln, format!("unknown bound type `{other}`"))),
                }
            }
            Sec::None => return Err(err(ln, "data outside a section".into())),
        }
    }

    for (i, c) in m.constraints.iter_mut().enumerate() {
        let b = rhs[i];
        let (lo, hi) = match (senses[i], range[i]) {
            ('L', None) => (f64::NEG_INFINITY, b),
            ('G', None) => (b, f64::INFINITY),
            ('E', None) => (b, b),
            ('L', Some(r)) => (b - r.abs(), b),
            ('G', Some(r)) => (b, b + r.abs()),
            (_, Some(r)) if r >= 0.0 => (b, b + r),
            (_, Some(r)) => (b + r, b),
            _ => unreachable!(),
        };
        c.lower = lo;
        c.upper = hi;
        c.terms = std::mem::take(&mut terms[i]).into_iter().map(|(v, a)| (v.0, a)).collect();
    }
    // An integer column with no bounds at all is binary by convention.
    for (j, v) in m.variables.iter_mut().enumerate() {
        if v.kind == VarKind::Integer && !bounded.contains(&j) {
            v.upper = 1.0;
        }
        if v.kind == VarKind::Integer && v.lower == 0.0 && v.upper == 1.0 {
            v.kind = VarKind::Binary;
        }
    }
    Ok(m)
}
