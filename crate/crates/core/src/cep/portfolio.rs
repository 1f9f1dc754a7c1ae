use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::build::{build_var, reinforce_var};
use crate::error::{Error, Result};
use crate::grid::{CandidateKind, Integrality, Network};
use crate::milp::MilpInstance;
use crate::solver::Solution;

/// Tolerance on build bounds and unit multiples, MW.
const BUILD_TOL: f64 = 1e-6;

/// Investment decisions on one network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    /// Free-form label of the network the portfolio belongs to.
    #[serde(default)]
    pub network: String,
    /// Generation candidate id → MW.
    pub gen_build: BTreeMap<String, f64>,
    /// Storage candidate id → MW of power capacity.
    pub storage_build: BTreeMap<String, f64>,
    /// Reinforcible branch id → reinforced.
    pub line_reinforced: BTreeMap<String, bool>,
}

impl Portfolio {
    /// Nothing built, nothing reinforced.
    pub fn zeros(net: &Network, label: impl Into<String>) -> Self {
        let mut p = Self {
            network: label.into(),
            ..Default::default()
        };
        for c in &net.candidates {
            p.builds_mut(c.kind).insert(c.id.clone(), 0.0);
        }
        for b in net.branches.iter().filter(|b| b.reinforcible) {
            p.line_reinforced.insert(b.id.clone(), false);
        }
        p
    }

    fn builds_mut(&mut self, kind: CandidateKind) -> &mut BTreeMap<String, f64> {
        match kind {
            CandidateKind::Generation => &mut self.gen_build,
            CandidateKind::Storage => &mut self.storage_build,
        }
    }

    /// MW built at a candidate (zero when absent).
    pub fn build_mw(&self, candidate: &str) -> f64 {
        self.gen_build
            .get(candidate)
            .or_else(|| self.storage_build.get(candidate))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn reinforced(&self, branch: &str) -> bool {
        self.line_reinforced.get(branch).copied().unwrap_or(false)
    }

    /// Reads the investment columns of a solved CEP instance. Integer builds
    /// are rounded to whole units and continuous ones clamped into bounds.
    pub fn from_solution(net: &Network, m: &MilpInstance, sol: &Solution, label: impl Into<String>) -> Result<Self> {
        let mut p = Self::zeros(net, label);
        let value = |name: &str| {
            m.find_var(name)
                .map(|j| sol.values[j])
                .ok_or_else(|| Error::Model(format!("instance lacks column `{name}`")))
        };
        for c in &net.candidates {
            let t = build_var(c);
            let v = value(&t.var)?;
            let mw = match c.integrality {
                Integrality::Integer => v.round().max(0.0) * c.unit_size,
                Integrality::Continuous => v.clamp(0.0, c.max_build_mw()),
            };
            p.builds_mut(c.kind).insert(c.id.clone(), mw);
        }
        for b in net.branches.iter().filter(|b| b.reinforcible) {
            p.line_reinforced.insert(b.id.clone(), value(&reinforce_var(&b.id))? > 0.5);
        }
        Ok(p)
    }

    /// Contract check against `net`: known ids of the right kind, builds in
    /// `[0, max_build]`, whole units for integer candidates, reinforcement
    /// only on reinforcible branches.
    pub fn check(&self, net: &Network) -> Result<()> {
        for (map, kind) in [(&self.gen_build, CandidateKind::Generation), (&self.storage_build, CandidateKind::Storage)] {
            for (id, &mw) in map {
                let c = net
                    .candidate(id)
                    .ok_or_else(|| Error::Portfolio(format!("unknown candidate `{id}`")))?;
                if c.kind != kind {
                    return Err(Error::Portfolio(format!("candidate `{id}` listed under the wrong kind")));
                }
                if !(mw >= -BUILD_TOL && mw <= c.max_build_mw() + BUILD_TOL) {
                    return Err(Error::Portfolio(format!(
                        "candidate `{id}` build {mw} MW outside [0, {}]",
                        c.max_build_mw()
                    )));
                }
                if c.integrality == Integrality::Integer {
                    let units = mw / c.unit_size;
                    if (units - units.round()).abs() * c.unit_size > BUILD_TOL {
                        return Err(Error::Portfolio(format!(
                            "candidate `{id}` build {mw} MW is not a multiple of {} MW",
                            c.unit_size
                        )));
                    }
                }
            }
        }
        for (id, &on) in &self.line_reinforced {
            match net.branch(id) {
                Some(b) if b.reinforcible => {}
                Some(_) if !on => {}
                Some(_) => return Err(Error::Portfolio(format!("branch `{id}` is not reinforcible"))),
                None => return Err(Error::Portfolio(format!("unknown branch `{id}`"))),
            }
        }
        Ok(())
    }

    /// Annualised investment cost.
    pub fn capex(&self, net: &Network) -> f64 {
        let gen: f64 = net.candidates.iter().map(|c| c.capex * self.build_mw(&c.id)).sum();
        let lines: f64 = net
            .branches
            .iter()
            .filter(|b| b.reinforcible && self.reinforced(&b.id))
            .map(|b| b.reinforce_cost)
            .sum();
        gen + lines
    }

    /// MW built per technology, storage included.
    pub fn by_tech(&self, net: &Network) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for c in &net.candidates {
            *out.entry(c.tech.clone()).or_insert(0.0) += self.build_mw(&c.id);
        }
        out
    }
}

/// Fixes every investment column of `m` to the portfolio's decisions.
pub fn fix_portfolio(m: &mut MilpInstance, net: &Network, x: &Portfolio) -> Result<()> {
    x.check(net)?;
    for c in &net.candidates {
        let t = build_var(c);
        let j = m
            .var_index(&t.var)
            .ok_or_else(|| Error::Model(format!("instance lacks column `{}`", t.var)))?;
        let mut v = x.build_mw(&c.id) / t.mw_per_unit;
        if c.integrality == Integrality::Integer {
            v = v.round();
        }
        let v = v.clamp(m.variables[j].lower, m.variables[j].upper);
        m.fix(j, v);
    }
    for b in net.branches.iter().filter(|b| b.reinforcible) {
        let name = reinforce_var(&b.id);
        let j = m
            .var_index(&name)
            .ok_or_else(|| Error::Model(format!("instance lacks column `{name}`")))?;
        m.fix(j, if x.reinforced(&b.id) { 1.0 } else { 0.0 });
    }
    Ok(())
}
