//! Scores for mapped solutions: ERMM, reliability and investment deltas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cep::{OperationalDetail, Portfolio};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::scenarios::HOURS;

/// Hourly shed above this many MW counts as a loss-of-load hour.
pub const SHED_THRESHOLD_MW: f64 = 1e-6;

/// Error of reduced model mapping, percent: `(f(x') − f(x*)) / f(x*) × 100`.
pub fn ermm(f_xprime: f64, f_xstar: f64) -> Result<f64> {
    if !(f_xstar > 0.0) || !f_xprime.is_finite() {
        return Err(Error::Metrics(format!("ERMM needs a positive baseline, got {f_xstar}")));
    }
    Ok((f_xprime - f_xstar) / f_xstar * 100.0)
}

/// ERMM of probability-weighted costs; both lists hold `(p_ω, f_ω)` in the
/// same scenario order.
pub fn ermm_stochastic(xprime: &[(f64, f64)], xstar: &[(f64, f64)]) -> Result<f64> {
    if xprime.is_empty() || xprime.len() != xstar.len() {
        return Err(Error::Metrics(format!(
            "scenario sets differ in size ({} vs {})",
            xprime.len(),
            xstar.len()
        )));
    }
    if let Some(i) = xprime.iter().zip(xstar).position(|(a, b)| (a.0 - b.0).abs() > 1e-9) {
        return Err(Error::Metrics(format!("scenario {i} has mismatched probabilities")));
    }
    let total: f64 = xprime.iter().map(|s| s.0).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Metrics(format!("probabilities sum to {total}")));
    }
    let mean = |s: &[(f64, f64)]| s.iter().map(|(p, f)| p * f).sum::<f64>();
    ermm(mean(xprime), mean(xstar))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmmCase {
    pub id: String,
    pub ermm: f64,
    /// Set for negative values, which only solver gaps can produce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmmReport {
    pub cases: Vec<ErmmCase>,
    pub average: f64,
    pub median: f64,
    pub max: f64,
}

impl ErmmReport {
    /// `gap_allowance` is the combined relative MIP gap of both solves; a
    /// negative value within it is annotated as such, beyond it as suspect.
    pub fn new(cases: Vec<(String, f64)>, gap_allowance: f64) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Metrics("no ERMM cases".into()));
        }
        let mut sorted: Vec<f64> = cases.iter().map(|c| c.1).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        let average = sorted.iter().sum::<f64>() / n as f64;
        let cases = cases
            .into_iter()
            .map(|(id, e)| {
                let note = (e < 0.0).then(|| {
                    if -e <= gap_allowance * 100.0 + 1e-9 {
                        "negative, within the combined MIP gap".to_string()
                    } else {
                        "negative beyond the combined MIP gap".to_string()
                    }
                });
                ErmmCase { id, ermm: e, note }
            })
            .collect();
        Ok(Self {
            cases,
            average,
            median,
            max: sorted[n - 1],
        })
    }

    /// One `id,ermm` row per case, with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,ermm_percent\n");
        for c in &self.cases {
            out.push_str(&format!("{},{}\n", c.id, c.ermm));
        }
        out
    }
}

impl fmt::Display for ErmmReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>12}", "case", "ERMM (%)")?;
        for c in &self.cases {
            write!(f, "{:<16}{:>12.4}", c.id, c.ermm)?;
            if let Some(n) = &c.note {
                write!(f, "  ({n})")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "{:<16}{:>12.4}", "average", self.average)?;
        writeln!(f, "{:<16}{:>12.4}", "median", self.median)?;
        write!(f, "{:<16}{:>12.4}", "max", self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    /// Expected unserved energy, MWh, scaled by `annual_scaling`.
    pub eue_mwh: f64,
    pub lolh_hours: usize,
    pub total_hours: usize,
    /// Renewable dispatch over served load, percent.
    pub achieved_rps: f64,
}

impl fmt::Display for ReliabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "EUE            {:.3} MWh", self.eue_mwh)?;
        writeln!(f, "LOLH           {}h / {}h", self.lolh_hours, self.total_hours)?;
        write!(f, "achieved RPS   {:.1}%", self.achieved_rps)
    }
}

/// EUE, LOLH and achieved RPS over per-day operations. Days are weighted by
/// their probability; the RPS share is the ratio of the weighted sums.
pub fn reliability_metrics(details: &[OperationalDetail], annual_scaling: f64) -> Result<ReliabilityReport> {
    if details.is_empty() {
        return Err(Error::Metrics("no operational detail".into()));
    }
    let mut eue = 0.0;
    let mut lolh = 0;
    let mut renewable = 0.0;
    let mut served = 0.0;
    for d in details {
        let shed: f64 = d.shed.iter().sum();
        eue += d.probability * shed * annual_scaling;
        lolh += d.shed.iter().filter(|s| **s > SHED_THRESHOLD_MW).count();
        renewable += d.probability * d.renewable.iter().sum::<f64>();
        served += d.probability * (d.load.iter().sum::<f64>() - shed);
    }
    Ok(ReliabilityReport {
        eue_mwh: eue,
        lolh_hours: lolh,
        total_hours: details.len() * HOURS,
        achieved_rps: if served > 0.0 { renewable / served * 100.0 } else { 0.0 },
    })
}

/// Maps technology names onto reporting groups; unmapped names stand alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TechGrouping {
    pub groups: BTreeMap<String, String>,
}

impl TechGrouping {
    /// Lumps every `solar*` technology into `solar` and every `gas*` or
    /// `ng*` one into `natural gas`.
    pub fn lumped(techs: impl IntoIterator<Item = impl AsRef<str>>) -> Self {
        let groups = techs
            .into_iter()
            .filter_map(|t| {
                let t = t.as_ref();
                let lower = t.to_ascii_lowercase();
                let g = if lower.starts_with("solar") {
                    "solar"
                } else if lower.starts_with("gas") || lower.starts_with("ng") {
                    "natural gas"
                } else {
                    return None;
                };
                Some((t.to_string(), g.to_string()))
            })
            .collect();
        Self { groups }
    }

    pub fn group_of<'a>(&'a self, tech: &'a str) -> &'a str {
        self.groups.get(tech).map_or(tech, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub group: String,
    pub base_mw: f64,
    pub other_mw: f64,
    pub delta_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub rows: Vec<DeltaRow>,
    pub total: DeltaRow,
}

impl fmt::Display for DeltaTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>12}{:>12}{:>12}", "technology", "base", "other", "delta")?;
        for r in self.rows.iter().chain([&self.total]) {
            writeln!(f, "{:<16}{:>12.1}{:>12.1}{:>12.1}", r.group, r.base_mw, r.other_mw, r.delta_mw)?;
        }
        Ok(())
    }
}

/// Built MW per technology group, `other − base`. Storage counts its power
/// capacity. Technologies come from `net`; ids it does not know are grouped
/// under their own id.
pub fn investment_delta(base: &Portfolio, other: &Portfolio, net: &Network, grouping: &TechGrouping) -> DeltaTable {
    let tech_of = |id: &str| net.candidate(id).map_or(id.to_string(), |c| c.tech.clone());
    let ids: BTreeSet<&String> = [base, other]
        .iter()
        .flat_map(|p| p.gen_build.keys().chain(p.storage_build.keys()))
        .collect();
    let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for id in ids {
        let tech = tech_of(id);
        let e = sums.entry(grouping.group_of(&tech).to_string()).or_default();
        e.0 += base.build_mw(id);
        e.1 += other.build_mw(id);
    }
    let row = |group: String, (b, o): (f64, f64)| DeltaRow {
        group,
        base_mw: b,
        other_mw: o,
        delta_mw: o - b,
    };
    let total = sums.values().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    DeltaTable {
        rows: sums.into_iter().map(|(g, v)| row(g, v)).collect(),
        total: row("total".into(), total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ermm_examples() {
        assert_eq!(ermm(105.0, 100.0).unwrap(), 5.0);
        assert_eq!(ermm(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(ermm(99.0, 100.0).unwrap(), -1.0);
        assert!(ermm(1.0, 0.0).is_err());
    }

    #[test]
    fn ermm_stochastic_examples() {
        assert_eq!(ermm_stochastic(&[(1.0, 105.0)], &[(1.0, 100.0)]).unwrap(), 5.0);
        assert_eq!(
            ermm_stochastic(&[(0.5, 110.0), (0.5, 90.0)], &[(0.5, 100.0), (0.5, 100.0)]).unwrap(),
            0.0
        );
        assert_eq!(
            ermm_stochastic(&[(0.25, 120.0), (0.75, 104.0)], &[(0.25, 100.0), (0.75, 100.0)]).unwrap(),
            8.0
        );
        assert!(ermm_stochastic(&[(1.0, 1.0)], &[(0.5, 1.0), (0.5, 1.0)]).is_err());
    }

    #[test]
    fn negative_values_annotated() {
        let r = ErmmReport::new(vec![("a".into(), -0.5), ("b".into(), 3.0), ("c".into(), -4.0)], 0.011).unwrap();
        assert_eq!(r.median, -0.5);
        assert_eq!(r.max, 3.0);
        assert!(r.cases[0].note.as_deref().unwrap().contains("within"));
        assert!(r.cases[2].note.as_deref().unwrap().contains("beyond"));
        assert!(r.cases[1].note.is_none());
    }
}
