use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub buses: usize,
    pub branches: usize,
    pub lines: usize,
    pub transformers: usize,
    pub generators: usize,
    pub storage: usize,
    pub loads: usize,
    pub candidates: usize,
    /// Smallest line resistance, p.u.; `None` when no lines remain.
    pub min_r: Option<f64>,
    pub min_x: Option<f64>,
}

impl NetworkStats {
    pub fn of(net: &Network) -> Self {
        let min = |f: fn(&crate::grid::Branch) -> f64| net.lines().map(f).reduce(f64::min);
        Self {
            buses: net.buses.len(),
            branches: net.branches.len(),
            lines: net.lines().count(),
            transformers: net.transformers().count(),
            generators: net.generators.len(),
            storage: net.storage.len(),
            loads: net.loads.len(),
            candidates: net.candidates.len(),
            min_r: min(|b| b.r),
            min_x: min(|b| b.x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStats {
    pub original: NetworkStats,
    pub reduced: NetworkStats,
}

pub fn reduction_stats(original: &Network, reduced: &Network) -> ReductionStats {
    ReductionStats {
        original: NetworkStats::of(original),
        reduced: NetworkStats::of(reduced),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into())
}

impl fmt::Display for ReductionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14}{:>12}{:>12}", "", "original", "reduced")?;
        let rows: [(&str, usize, usize); 8] = [
            ("buses", self.original.buses, self.reduced.buses),
            ("lines", self.original.lines, self.reduced.lines),
            ("transformers", self.original.transformers, self.reduced.transformers),
            ("generators", self.original.generators, self.reduced.generators),
            ("storage", self.original.storage, self.reduced.storage),
            ("loads", self.original.loads, self.reduced.loads),
            ("candidates", self.original.candidates, self.reduced.candidates),
            ("branches", self.original.branches, self.reduced.branches),
        ];
        for (name, a, b) in rows {
            writeln!(f, "{name:<14}{a:>12}{b:>12}")?;
        }
        writeln!(f, "{:<14}{:>12}{:>12}", "min r (pu)", opt(self.original.min_r), opt(self.reduced.min_r))?;
        write!(f, "{:<14}{:>12}{:>12}", "min x (pu)", opt(self.original.min_x), opt(self.reduced.min_x))
    }
}
