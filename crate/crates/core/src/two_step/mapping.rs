use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cep::{build_var, reinforce_var, Portfolio};
use crate::error::{Error, Result};
use crate::grid::{Candidate, Integrality, Network};
use crate::milp::{MilpInstance, VarId};
use crate::reduction::MergeMap;

/// Slack in MW on each group-total row.
pub const GROUP_SLACK_MW: f64 = 1e-6;

const TOL: f64 = 1e-9;

/// How reduced generation and storage builds constrain the original model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenStorageMap {
    /// Fix every site to a proportional share of its group's build.
    A,
    /// Fix each group's total, sites free.
    B,
    /// Fix each technology's network-wide total.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransmissionMap {
    /// Reinforce exactly the components of reinforced reduced lines.
    MapComponents,
    /// Reinforce every reinforcible line.
    ReinforceAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MappingStrategy {
    pub gen_storage: GenStorageMap,
    pub transmission: TransmissionMap,
}

impl Default for MappingStrategy {
    fn default() -> Self {
        Self {
            gen_storage: GenStorageMap::A,
            transmission: TransmissionMap::MapComponents,
        }
    }
}

/// `total − slack ≤ Σ build(candidates) ≤ total + slack`, in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTotal {
    pub name: String,
    pub candidates: Vec<String>,
    pub total_mw: f64,
    pub slack_mw: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvestmentMapping {
    /// Candidate id → fixed MW.
    pub fixed: BTreeMap<String, f64>,
    pub totals: Vec<GroupTotal>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineFixing {
    /// Branch id → fixed reinforcement decision.
    pub fixed: BTreeMap<String, bool>,
    /// Reinforcible branches left to the Step (2) model.
    pub free: Vec<String>,
}

/// Original candidates grouped by (technology, reduced bus).
fn groups<'a>(mm: &MergeMap, original: &'a Network) -> Result<BTreeMap<(String, String), Vec<&'a Candidate>>> {
    let mut out: BTreeMap<(String, String), Vec<&Candidate>> = BTreeMap::new();
    for c in &original.candidates {
        let bus = mm
            .relocation
            .candidates
            .get(&c.id)
            .ok_or_else(|| Error::Mapping(format!("candidate `{}` is missing from the merge map", c.id)))?;
        out.entry((c.tech.clone(), bus.clone())).or_default().push(c);
    }
    Ok(out)
}

/// Splits `total` MW over sites in proportion to their capacity. Integer
/// sites get whole units by largest remainder; MW that rounding leaves over
/// is poured into the remaining room of continuous sites.
pub fn apportion(total: f64, sites: &[&Candidate]) -> Result<Vec<f64>> {
    let caps: Vec<f64> = sites.iter().map(|c| c.max_build_mw()).collect();
    let cap_sum: f64 = caps.iter().sum();
    if total <= TOL {
        return Ok(vec![0.0; sites.len()]);
    }
    if total > cap_sum + 1e-6 {
        return Err(Error::Mapping(format!("{total} MW exceeds the group's capacity of {cap_sum} MW")));
    }
    let total = total.min(cap_sum);
    let target: Vec<f64> = caps.iter().map(|c| total * c / cap_sum).collect();
    let unit = |c: &Candidate| (c.integrality == Integrality::Integer).then_some(c.unit_size);
    let mut alloc: Vec<f64> = sites
        .iter()
        .zip(&target)
        .map(|(c, &t)| match unit(c) {
            Some(u) => ((t / u) + TOL).floor() * u,
            None => t,
        })
        .collect();
    let mut rest = total - alloc.iter().sum::<f64>();

    let mut order: Vec<usize> = (0..sites.len()).filter(|&i| unit(sites[i]).is_some()).collect();
    order.sort_by(|&a, &b| {
        let frac = |i: usize| (target[i] - alloc[i]) / sites[i].unit_size;
        frac(b).total_cmp(&frac(a)).then(a.cmp(&b))
    });
    for _ in 0..2 {
        for &i in &order {
            let u = sites[i].unit_size;
            if rest >= u - 1e-6 && alloc[i] + u <= caps[i] + TOL {
                alloc[i] += u;
                rest -= u;
            }
        }
    }
    if rest > TOL {
        let room: Vec<f64> = (0..sites.len())
            .map(|i| if unit(sites[i]).is_none() { caps[i] - alloc[i] } else { 0.0 })
            .collect();
        let room_sum: f64 = room.iter().sum();
        if room_sum + 1e-6 < rest {
            return Err(Error::Mapping(format!("cannot place {rest} MW of {total} MW on the group's sites")));
        }
        for i in 0..sites.len() {
            alloc[i] += rest * room[i] / room_sum;
        }
        rest = 0.0;
    }
    if rest.abs() > 1e-6 {
        return Err(Error::Mapping(format!("{rest} MW of {total} MW could not be apportioned in whole units")));
    }
    Ok(alloc)
}

/// Investment constraints for Step (2) from the reduced solution.
pub fn map_investments(
    reduced_x: &Portfolio,
    mm: &MergeMap,
    strategy: GenStorageMap,
    original: &Network,
) -> Result<InvestmentMapping> {
    let groups = groups(mm, original)?;
    let mut out = InvestmentMapping::default();
    match strategy {
        GenStorageMap::A => {
            for sites in groups.values() {
                let total: f64 = sites.iter().map(|c| reduced_x.build_mw(&c.id)).sum();
                for (c, mw) in sites.iter().zip(apportion(total, sites)?) {
                    out.fixed.insert(c.id.clone(), mw);
                }
            }
        }
        GenStorageMap::B => {
            for ((tech, bus), sites) in &groups {
                out.totals.push(GroupTotal {
                    name: format!("{tech}@{bus}"),
                    candidates: sites.iter().map(|c| c.id.clone()).collect(),
                    total_mw: sites.iter().map(|c| reduced_x.build_mw(&c.id)).sum(),
                    slack_mw: GROUP_SLACK_MW,
                });
            }
        }
        GenStorageMap::C => {
            let mut by_tech: BTreeMap<&str, (Vec<String>, f64, usize)> = BTreeMap::new();
            for ((tech, _), sites) in &groups {
                let e = by_tech.entry(tech.as_str()).or_default();
                e.0.extend(sites.iter().map(|c| c.id.clone()));
                e.1 += sites.iter().map(|c| reduced_x.build_mw(&c.id)).sum::<f64>();
                e.2 += 1;
            }
            for (tech, (candidates, total_mw, n_groups)) in by_tech {
                out.totals.push(GroupTotal {
                    name: tech.to_string(),
                    candidates,
                    total_mw,
                    // Wide enough to contain every Map B solution.
                    slack_mw: GROUP_SLACK_MW * n_groups as f64,
                });
            }
        }
    }
    Ok(out)
}

/// Reinforcement decisions for Step (2) from the reduced solution.
pub fn map_transmission(
    reduced_x: &Portfolio,
    mm: &MergeMap,
    mode: TransmissionMap,
    original: &Network,
) -> Result<LineFixing> {
    let mut out = LineFixing::default();
    match mode {
        TransmissionMap::ReinforceAll => {
            for b in original.branches.iter().filter(|b| b.reinforcible) {
                out.fixed.insert(b.id.clone(), true);
            }
        }
        TransmissionMap::MapComponents => {
            for (reduced, comp) in &mm.line_composition {
                let on = reduced_x.reinforced(reduced);
                for l in comp.flatten() {
                    let b = original
                        .branch(&l)
                        .ok_or_else(|| Error::Mapping(format!("composition of `{reduced}` names unknown line `{l}`")))?;
                    if b.reinforcible {
                        // A line carried by several reduced lines is reinforced
                        // if any of them is.
                        *out.fixed.entry(l).or_insert(false) |= on;
                    }
                }
            }
            // Transformers keep their ids through a reduction.
            for t in original.branches.iter().filter(|b| !b.is_line() && b.reinforcible) {
                if reduced_x.line_reinforced.contains_key(&t.id) {
                    out.fixed.insert(t.id.clone(), reduced_x.reinforced(&t.id));
                }
            }
            out.free = original
                .branches
                .iter()
                .filter(|b| b.reinforcible && !out.fixed.contains_key(&b.id))
                .map(|b| b.id.clone())
                .collect();
        }
    }
    Ok(out)
}

fn column(m: &mut MilpInstance, name: &str) -> Result<usize> {
    m.var_index(name)
        .ok_or_else(|| Error::Mapping(format!("Step (2) model lacks column `{name}`")))
}

/// Adds the mapping to an original-network CEP instance: fixed builds become
/// column bounds, group totals become range rows, line decisions are fixed.
pub fn apply_mapping(m: &mut MilpInstance, original: &Network, inv: &InvestmentMapping, lines: &LineFixing) -> Result<()> {
    for (id, &mw) in &inv.fixed {
        let c = original
            .candidate(id)
            .ok_or_else(|| Error::Mapping(format!("unknown candidate `{id}`")))?;
        let t = build_var(c);
        let j = column(m, &t.var)?;
        let mut v = mw / t.mw_per_unit;
        if c.integrality == Integrality::Integer {
            v = v.round();
        }
        let v = v.clamp(m.variables[j].lower, m.variables[j].upper);
        m.fix(j, v);
    }
    for g in &inv.totals {
        let mut terms = Vec::with_capacity(g.candidates.len());
        for id in &g.candidates {
            let c = original
                .candidate(id)
                .ok_or_else(|| Error::Mapping(format!("unknown candidate `{id}`")))?;
            let t = build_var(c);
            terms.push((VarId(column(m, &t.var)?), t.mw_per_unit));
        }
        m.add_constraint(
            format!("map.{}", g.name),
            terms,
            g.total_mw - g.slack_mw,
            g.total_mw + g.slack_mw,
        );
    }
    for (id, &on) in &lines.fixed {
        let j = column(m, &reinforce_var(id))?;
        m.fix(j, if on { 1.0 } else { 0.0 });
    }
    Ok(())
}
