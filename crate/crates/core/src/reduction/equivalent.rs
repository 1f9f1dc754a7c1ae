//! Series and parallel impedance equivalents.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Branch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalent {
    pub r: f64,
    pub x: f64,
    /// MW.
    pub rating: f64,
}

impl From<&Branch> for Equivalent {
    fn from(b: &Branch) -> Self {
        Self {
            r: b.r,
            x: b.x,
            rating: b.rating,
        }
    }
}

/// Which rating a series chain keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesRating {
    /// Rating of the last element: the outer line re-attached to a merged bus.
    Outer,
    /// Most restrictive rating along the chain.
    Minimum,
}

pub(crate) fn series_of(parts: &[Equivalent], rule: SeriesRating) -> Result<Equivalent> {
    let last = parts.last().ok_or_else(|| Error::Config("empty series chain".into()))?;
    let rating = match rule {
        SeriesRating::Outer => last.rating,
        SeriesRating::Minimum => parts.iter().map(|p| p.rating).fold(f64::INFINITY, f64::min),
    };
    Ok(Equivalent {
        r: parts.iter().map(|p| p.r).sum(),
        x: parts.iter().map(|p| p.x).sum(),
        rating,
    })
}

pub(crate) fn parallel_of(parts: &[Equivalent]) -> Result<Equivalent> {
    if parts.is_empty() {
        return Err(Error::Config("empty parallel group".into()));
    }
    if parts.len() == 1 {
        return Ok(parts[0]);
    }
    let mut admittance = Complex64::new(0.0, 0.0);
    for p in parts {
        let z = Complex64::new(p.r, p.x);
        if z.norm_sqr() == 0.0 {
            return Err(Error::Config("parallel branch with zero impedance".into()));
        }
        admittance += z.inv();
    }
    let z = admittance.inv();
    Ok(Equivalent {
        r: z.re,
        x: z.im,
        rating: parts.iter().map(|p| p.rating).sum(),
    })
}

/// Series composition of a chain of branches. Consecutive branches must share
/// a bus.
pub fn series_equivalent(chain: &[Branch], rule: SeriesRating) -> Result<Equivalent> {
    for pair in chain.windows(2) {
        let shared = [&pair[0].from_bus, &pair[0].to_bus]
            .iter()
            .any(|b| pair[1].touches(b));
        if !shared {
            return Err(Error::Config(format!(
                "branches `{}` and `{}` do not share a bus",
                pair[0].id, pair[1].id
            )));
        }
    }
    let parts: Vec<Equivalent> = chain.iter().map(Equivalent::from).collect();
    series_of(&parts, rule)
}

/// Complex-admittance parallel composition; ratings add.
pub fn parallel_equivalent(group: &[Branch]) -> Result<Equivalent> {
    if let Some(first) = group.first() {
        let key = endpoint_key(first);
        if let Some(bad) = group.iter().find(|b| endpoint_key(b) != key) {
            return Err(Error::Config(format!(
                "branch `{}` does not share endpoints with `{}`",
                bad.id, first.id
            )));
        }
    }
    if let Some(bad) = group.iter().find(|b| b.r == 0.0 && b.x == 0.0) {
        return Err(Error::Config(format!("branch `{}` has zero impedance", bad.id)));
    }
    let parts: Vec<Equivalent> = group.iter().map(Equivalent::from).collect();
    parallel_of(&parts)
}

fn endpoint_key(b: &Branch) -> (&str, &str) {
    if b.from_bus <= b.to_bus {
        (&b.from_bus, &b.to_bus)
    } else {
        (&b.to_bus, &b.from_bus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BranchKind;

    fn br(id: &str, a: &str, b: &str, r: f64, x: f64, rating: f64) -> Branch {
        Branch {
            id: id.into(),
            from_bus: a.into(),
            to_bus: b.into(),
            kind: BranchKind::Line,
            r,
            x,
            rating,
            reinforce_cost: 0.0,
            reinforcible: false,
        }
    }

    #[test]
    fn series_cases() {
        let one = series_equivalent(&[br("a", "1", "2", 0.01, 0.10, 5.0)], SeriesRating::Outer).unwrap();
        assert_eq!((one.r, one.x, one.rating), (0.01, 0.10, 5.0));

        let chain = [br("a", "1", "2", 0.01, 0.10, 5.0), br("b", "2", "3", 0.02, 0.20, 3.0)];
        let s = series_equivalent(&chain, SeriesRating::Minimum).unwrap();
        assert!((s.r - 0.03).abs() < 1e-15 && (s.x - 0.30).abs() < 1e-15);
        assert_eq!(s.rating, 3.0);
        assert_eq!(series_equivalent(&chain, SeriesRating::Outer).unwrap().rating, 3.0);

        assert!(series_equivalent(&[], SeriesRating::Outer).is_err());
        let broken = [br("a", "1", "2", 0.01, 0.1, 1.0), br("b", "3", "4", 0.01, 0.1, 1.0)];
        assert!(series_equivalent(&broken, SeriesRating::Outer).is_err());
    }

    #[test]
    fn parallel_cases() {
        let one = parallel_equivalent(&[br("a", "1", "2", 0.02, 0.20, 5.0)]).unwrap();
        assert_eq!((one.r, one.x, one.rating), (0.02, 0.20, 5.0));

        let twin = [br("a", "1", "2", 0.02, 0.20, 1.0), br("b", "2", "1", 0.02, 0.20, 1.0)];
        let t = parallel_equivalent(&twin).unwrap();
        assert!((t.r - 0.01).abs() < 1e-12 && (t.x - 0.10).abs() < 1e-12);
        assert_eq!(t.rating, 2.0);

        // z2 = 2 z1, so z_eq = (2/3) z1.
        let mixed = [br("a", "1", "2", 0.01, 0.10, 1.0), br("b", "1", "2", 0.02, 0.20, 1.0)];
        let m = parallel_equivalent(&mixed).unwrap();
        assert!((m.r - 0.006667).abs() < 1e-6, "{}", m.r);
        assert!((m.x - 0.066667).abs() < 1e-6, "{}", m.x);
        assert_eq!(m.rating, 2.0);

        assert!(parallel_equivalent(&[]).is_err());
        let zero = [br("a", "1", "2", 0.0, 0.0, 1.0), br("b", "1", "2", 0.01, 0.1, 1.0)];
        assert!(parallel_equivalent(&zero).is_err());
        let skew = [br("a", "1", "2", 0.01, 0.1, 1.0), br("b", "1", "3", 0.01, 0.1, 1.0)];
        assert!(parallel_equivalent(&skew).is_err());
    }
}
