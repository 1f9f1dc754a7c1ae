use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{line_components, CandidateKind, Integrality, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    fn error(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Error,
            message,
        });
    }

    fn warn(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            let tag = match issue.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "  {tag}: {}", issue.message)?;
        }
        Ok(())
    }
}

fn check_id(report: &mut ValidationReport, seen: &mut HashSet<String>, kind: &str, id: &str) {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace()) {
        report.error(format!("{kind} id `{id}` must be nonempty and free of whitespace"));
    }
    if !seen.insert(id.to_string()) {
        report.error(format!("duplicate {kind} id `{id}`"));
    }
}

fn check_bus_ref(report: &mut ValidationReport, buses: &HashSet<String>, kind: &str, id: &str, bus: &str) {
    if !buses.contains(bus) {
        report.error(format!("{kind} `{id}` references missing bus `{bus}`"));
    }
}

fn nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Collects every invariant violation. Disconnected islands are warnings; all
/// other findings are errors.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut bus_ids = HashSet::new();
    for bus in &net.buses {
        check_id(&mut report, &mut bus_ids, "bus", &bus.id);
        if !bus.location.is_valid() {
            report.error(format!(
                "bus `{}` has out-of-range location ({}, {})",
                bus.id, bus.location.latitude, bus.location.longitude
            ));
        }
        if !(bus.base_kv.is_finite() && bus.base_kv > 0.0) {
            report.error(format!("bus `{}` has nonpositive base_kv {}", bus.id, bus.base_kv));
        }
    }

    let mut seen = HashSet::new();
    for br in &net.branches {
        check_id(&mut report, &mut seen, "branch", &br.id);
        check_bus_ref(&mut report, &bus_ids, "branch", &br.id, &br.from_bus);
        check_bus_ref(&mut report, &bus_ids, "branch", &br.id, &br.to_bus);
        if br.from_bus == br.to_bus {
            if br.is_line() {
                report.error(format!("line `{}` is a self-loop at `{}`", br.id, br.from_bus));
            } else {
                // Reduction can fold both sides of a transformer onto one bus.
                report.warn(format!("transformer `{}` is a self-loop at `{}`", br.id, br.from_bus));
            }
        }
        if !nonneg(br.r) {
            report.error(format!("branch `{}` has negative resistance {}", br.id, br.r));
        }
        if !(br.x.is_finite() && br.x > 0.0) {
            report.error(format!("branch `{}` has nonpositive reactance {}", br.id, br.x));
        }
        if !(br.rating.is_finite() && br.rating > 0.0) {
            report.error(format!("branch `{}` has nonpositive rating {}", br.id, br.rating));
        }
        if !nonneg(br.reinforce_cost) {
            report.error(format!("branch `{}` has negative reinforce_cost", br.id));
        }
    }

    let mut seen = HashSet::new();
    for g in &net.generators {
        check_id(&mut report, &mut seen, "generator", &g.id);
        check_bus_ref(&mut report, &bus_ids, "generator", &g.id, &g.bus);
        if !nonneg(g.capacity) {
            report.error(format!("generator `{}` has negative capacity", g.id));
        }
        if !nonneg(g.variable_cost) {
            report.error(format!("generator `{}` has negative variable_cost", g.id));
        }
    }

    let mut seen = HashSet::new();
    for s in &net.storage {
        check_id(&mut report, &mut seen, "storage", &s.id);
        check_bus_ref(&mut report, &bus_ids, "storage", &s.id, &s.bus);
        if !nonneg(s.power_capacity) || !nonneg(s.energy_capacity) {
            report.error(format!("storage `{}` has negative capacity", s.id));
        }
        if !(s.round_trip_efficiency > 0.0 && s.round_trip_efficiency <= 1.0) {
            report.error(format!(
                "storage `{}` round_trip_efficiency {} outside (0, 1]",
                s.id, s.round_trip_efficiency
            ));
        }
    }

    let mut seen = HashSet::new();
    for l in &net.loads {
        check_id(&mut report, &mut seen, "load", &l.id);
        check_bus_ref(&mut report, &bus_ids, "load", &l.id, &l.bus);
        if !nonneg(l.peak) {
            report.error(format!("load `{}` has negative peak", l.id));
        }
    }

    let mut seen = HashSet::new();
    for c in &net.candidates {
        check_id(&mut report, &mut seen, "candidate", &c.id);
        check_bus_ref(&mut report, &bus_ids, "candidate", &c.id, &c.bus);
        if !(c.unit_size.is_finite() && c.unit_size > 0.0) {
            report.error(format!("candidate `{}` has nonpositive unit_size", c.id));
        }
        if !nonneg(c.max_build) {
            report.error(format!("candidate `{}` has negative max_build", c.id));
        }
        if !nonneg(c.capex) || !nonneg(c.variable_cost) {
            report.error(format!("candidate `{}` has negative cost", c.id));
        }
        if c.kind == CandidateKind::Storage {
            if !nonneg(c.duration_hours) {
                report.error(format!("candidate `{}` has negative duration_hours", c.id));
            }
            if !(c.round_trip_efficiency > 0.0 && c.round_trip_efficiency <= 1.0) {
                report.error(format!("candidate `{}` round_trip_efficiency outside (0, 1]", c.id));
            }
        }
        if c.integrality == Integrality::Integer && c.max_units() > 1 << 20 {
            report.error(format!("candidate `{}` allows more than 2^20 units", c.id));
        }
    }

    if !report.has_errors() && net.buses.len() > 1 {
        let islands = line_components(net, false);
        if islands.len() > 1 {
            report.warn(format!(
                "network has {} disconnected components (largest {} buses)",
                islands.len(),
                islands.iter().map(Vec::len).max().unwrap_or(0)
            ));
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Branch, BranchKind, Bus, GeoCoord};

    fn two_bus() -> Network {
        let bus = |id: &str, lon: f64| Bus {
            id: id.into(),
            location: GeoCoord::new(35.0, lon),
            is_substation: false,
            base_kv: 230.0,
        };
        Network {
            buses: vec![bus("a", -110.0), bus("b", -110.1)],
            branches: vec![Branch {
                id: "l1".into(),
                from_bus: "a".into(),
                to_bus: "b".into(),
                kind: BranchKind::Line,
                r: 0.01,
                x: 0.1,
                rating: 100.0,
                reinforce_cost: 1000.0,
                reinforcible: true,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn well_formed_is_empty() {
        assert!(validate_network(&two_bus()).is_empty());
    }

    #[test]
    fn dangling_bus_reference() {
        let mut n = two_bus();
        n.branches[0].to_bus = "zz".into();
        let r = validate_network(&n);
        assert_eq!(r.issues.len(), 1);
        assert!(r.issues[0].message.contains("l1") && r.issues[0].message.contains("zz"));
    }

    #[test]
    fn zero_reactance() {
        let mut n = two_bus();
        n.branches[0].x = 0.0;
        let r = validate_network(&n);
        assert_eq!(r.errors().count(), 1);
        assert_eq!(r.issues.len(), 1);
    }

    #[test]
    fn duplicate_ids_and_islands() {
        let mut n = two_bus();
        n.buses.push(n.buses[0].clone());
        assert!(validate_network(&n).errors().any(|i| i.message.contains("duplicate")));

        let mut n = two_bus();
        n.branches.clear();
        let r = validate_network(&n);
        assert!(!r.has_errors());
        assert_eq!(r.warnings().count(), 1);
    }
}
