use std::collections::HashMap;

use super::CepConfig;
use crate::error::{Error, Result};
use crate::grid::{Candidate, CandidateKind, Integrality, Network};
use crate::milp::{MilpInstance, Symbol, VarId, VarKind};
use crate::scenarios::{ScenarioDay, HOURS};

/// Probability sums further than this from one are rejected.
const PROBABILITY_SUM_TOL: f64 = 1e-9;

/// Investment column of a candidate and the MW one unit of it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildTerm {
    pub var: String,
    pub mw_per_unit: f64,
}

pub fn build_var(c: &Candidate) -> BuildTerm {
    BuildTerm {
        var: format!("build.{}", c.id),
        mw_per_unit: match c.integrality {
            Integrality::Integer => c.unit_size,
            Integrality::Continuous => 1.0,
        },
    }
}

pub fn reinforce_var(branch: &str) -> String {
    format!("reinforce.{branch}")
}

fn sym(element: &str, role: &str, hour: Option<usize>, day: &ScenarioDay) -> Option<Symbol> {
    Some(Symbol {
        element: element.to_string(),
        role: role.to_string(),
        hour: hour.map(|h| h as u32),
        scenario: Some(day.id.clone()),
    })
}

fn check_references(net: &Network) -> Result<HashMap<&str, usize>> {
    let index: HashMap<&str, usize> = net.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
    let refs = net
        .branches
        .iter()
        .flat_map(|b| [&b.from_bus, &b.to_bus])
        .chain(net.generators.iter().map(|g| &g.bus))
        .chain(net.storage.iter().map(|s| &s.bus))
        .chain(net.loads.iter().map(|l| &l.bus))
        .chain(net.candidates.iter().map(|c| &c.bus));
    for bus in refs {
        if !index.contains_key(bus.as_str()) {
            return Err(Error::UnknownBus(bus.clone()));
        }
    }
    Ok(index)
}

/// Single representative day, weighted as if it were the only scenario.
pub fn build_deterministic_cep(net: &Network, day: &ScenarioDay, cfg: &CepConfig) -> Result<MilpInstance> {
    build_stochastic_cep(net, &[day.with_probability(1.0)], cfg)
}

/// Extensive form: shared investment columns, one operational block per day
/// weighted by `probability × days_per_year`.
pub fn build_stochastic_cep(net: &Network, days: &[ScenarioDay], cfg: &CepConfig) -> Result<MilpInstance> {
    cfg.validate()?;
    if days.is_empty() {
        return Err(Error::Scenario("empty scenario set".into()));
    }
    let total: f64 = days.iter().map(|d| d.probability).sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::Scenario(format!("probabilities sum to {total}, expected 1")));
    }
    let bus_index = check_references(net)?;
    let max_cost = net
        .generators
        .iter()
        .map(|g| g.variable_cost)
        .chain(net.candidates.iter().map(|c| c.variable_cost))
        .fold(0.0f64, f64::max);
    if cfg.shed_penalty <= max_cost || (cfg.rps_target > 0.0 && cfg.rps_penalty <= max_cost) {
        return Err(Error::Config(format!(
            "penalties must exceed the largest variable cost ({max_cost} $/MWh)"
        )));
    }
    let kappa = cfg.loss_coefficient_for(net);
    let mult = cfg.reinforcement_multiplier;
    let nb = net.buses.len();

    let mut m = MilpInstance::new("cep");
    let invest_sym = |element: &str, role: &str| {
        Some(Symbol {
            element: element.to_string(),
            role: role.to_string(),
            hour: None,
            scenario: None,
        })
    };
    // Investment columns come first so the integer lattice is enumerated in
    // candidate order.
    let mut build: Vec<(VarId, f64)> = Vec::with_capacity(net.candidates.len());
    for c in &net.candidates {
        let t = build_var(c);
        let v = match c.integrality {
            Integrality::Integer => m.add_var(
                &t.var,
                0.0,
                c.max_units() as f64,
                VarKind::Integer,
                c.capex * c.unit_size,
                invest_sym(&c.id, "build"),
            ),
            Integrality::Continuous => m.add_var(
                &t.var,
                0.0,
                c.max_build_mw(),
                VarKind::Continuous,
                c.capex,
                invest_sym(&c.id, "build"),
            ),
        };
        build.push((v, t.mw_per_unit));
    }
    let reinforce: Vec<Option<VarId>> = net
        .branches
        .iter()
        .map(|b| {
            b.reinforcible.then(|| {
                m.add_var(
                    reinforce_var(&b.id),
                    0.0,
                    1.0,
                    VarKind::Binary,
                    b.reinforce_cost,
                    invest_sym(&b.id, "reinforce"),
                )
            })
        })
        .collect();

    for (w, day) in days.iter().enumerate() {
        let weight = day.probability * cfg.days_per_year;
        let mut load = vec![[0.0; HOURS]; nb];
        for l in &net.loads {
            let profile = day.load_profile(&l.profile_key)?;
            let b = bus_index[l.bus.as_str()];
            for h in 0..HOURS {
                load[b][h] += l.peak * profile[h];
            }
        }
        let gen_avail: Vec<Option<&[f64; HOURS]>> = net
            .generators
            .iter()
            .map(|g| g.availability_key.as_deref().map(|k| day.availability(k)).transpose())
            .collect::<Result<_>>()?;
        let cand_avail: Vec<Option<&[f64; HOURS]>> = net
            .candidates
            .iter()
            .map(|c| match c.kind {
                CandidateKind::Generation => c.availability_key.as_deref().map(|k| day.availability(k)).transpose(),
                CandidateKind::Storage => Ok(None),
            })
            .collect::<Result<_>>()?;
        let hydro_budget: Vec<Option<f64>> = net
            .generators
            .iter()
            .map(|g| g.is_hydro_budgeted.then(|| day.hydro_budget(&g.id)).transpose())
            .collect::<Result<_>>()?;

        let mut hydro_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); net.generators.len()];
        let mut rps_terms: Vec<(VarId, f64)> = Vec::new();
        let mut total_load = 0.0;
        // Storage state columns for all hours, so the cyclic recursion can
        // refer back from hour 0 to hour 23.
        let soc: Vec<Vec<VarId>> = net
            .storage
            .iter()
            .map(|s| {
                (0..HOURS)
                    .map(|h| {
                        m.add_var(
                            format!("soc.{w}.{h}.{}", s.id),
                            0.0,
                            s.energy_capacity,
                            VarKind::Continuous,
                            0.0,
                            sym(&s.id, "soc", Some(h), day),
                        )
                    })
                    .collect()
            })
            .collect();
        let cand_soc: Vec<Option<Vec<VarId>>> = net
            .candidates
            .iter()
            .map(|c| {
                (c.kind == CandidateKind::Storage).then(|| {
                    (0..HOURS)
                        .map(|h| {
                            m.add_var(
                                format!("soc.{w}.{h}.{}", c.id),
                                0.0,
                                f64::INFINITY,
                                VarKind::Continuous,
                                0.0,
                                sym(&c.id, "soc", Some(h), day),
                            )
                        })
                        .collect()
                })
            })
            .collect();

        for h in 0..HOURS {
            let mut bal: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nb];
            for (gi, g) in net.generators.iter().enumerate() {
                let avail = gen_avail[gi].map_or(1.0, |p| p[h]);
                let v = m.add_var(
                    format!("gen.{w}.{h}.{}", g.id),
                    0.0,
                    avail * g.capacity,
                    VarKind::Continuous,
                    weight * g.variable_cost,
                    sym(&g.id, "gen", Some(h), day),
                );
                bal[bus_index[g.bus.as_str()]].push((v, 1.0));
                if g.is_renewable {
                    rps_terms.push((v, 1.0));
                }
                if hydro_budget[gi].is_some() {
                    hydro_terms[gi].push((v, 1.0));
                }
            }
            for (ci, c) in net.candidates.iter().enumerate() {
                let b = bus_index[c.bus.as_str()];
                let (bv, mw) = build[ci];
                match c.kind {
                    CandidateKind::Generation => {
                        let avail = cand_avail[ci].map_or(1.0, |p| p[h]);
                        let v = m.add_var(
                            format!("cgen.{w}.{h}.{}", c.id),
                            0.0,
                            f64::INFINITY,
                            VarKind::Continuous,
                            weight * c.variable_cost,
                            sym(&c.id, "cgen", Some(h), day),
                        );
                        m.le(format!("cap.{w}.{h}.{}", c.id), vec![(v, 1.0), (bv, -avail * mw)], 0.0);
                        bal[b].push((v, 1.0));
                        if c.is_renewable {
                            rps_terms.push((v, 1.0));
                        }
                    }
                    CandidateKind::Storage => {
                        let eta = c.round_trip_efficiency.sqrt();
                        let ch = m.add_var(
                            format!("charge.{w}.{h}.{}", c.id),
                            0.0,
                            f64::INFINITY,
                            VarKind::Continuous,
                            0.0,
                            sym(&c.id, "charge", Some(h), day),
                        );
                        let dis = m.add_var(
                            format!("discharge.{w}.{h}.{}", c.id),
                            0.0,
                            f64::INFINITY,
                            VarKind::Continuous,
                            0.0,
                            sym(&c.id, "discharge", Some(h), day),
                        );
                        let s = cand_soc[ci].as_ref().unwrap();
                        m.le(format!("chcap.{w}.{h}.{}", c.id), vec![(ch, 1.0), (bv, -mw)], 0.0);
                        m.le(format!("discap.{w}.{h}.{}", c.id), vec![(dis, 1.0), (bv, -mw)], 0.0);
                        m.le(
                            format!("soccap.{w}.{h}.{}", c.id),
                            vec![(s[h], 1.0), (bv, -mw * c.duration_hours)],
                            0.0,
                        );
                        m.equality(
                            format!("socbal.{w}.{h}.{}", c.id),
                            vec![(s[h], 1.0), (s[(h + HOURS - 1) % HOURS], -1.0), (ch, -eta), (dis, 1.0 / eta)],
                            0.0,
                        );
                        bal[b].push((dis, 1.0));
                        bal[b].push((ch, -1.0));
                    }
                }
            }
            for (si, s) in net.storage.iter().enumerate() {
                let eta = s.round_trip_efficiency.sqrt();
                let ch = m.add_var(
                    format!("charge.{w}.{h}.{}", s.id),
                    0.0,
                    s.power_capacity,
                    VarKind::Continuous,
                    0.0,
                    sym(&s.id, "charge", Some(h), day),
                );
                let dis = m.add_var(
                    format!("discharge.{w}.{h}.{}", s.id),
                    0.0,
                    s.power_capacity,
                    VarKind::Continuous,
                    0.0,
                    sym(&s.id, "discharge", Some(h), day),
                );
                let q = &soc[si];
                m.equality(
                    format!("socbal.{w}.{h}.{}", s.id),
                    vec![(q[h], 1.0), (q[(h + HOURS - 1) % HOURS], -1.0), (ch, -eta), (dis, 1.0 / eta)],
                    0.0,
                );
                let b = bus_index[s.bus.as_str()];
                bal[b].push((dis, 1.0));
                bal[b].push((ch, -1.0));
            }
            for (li, l) in net.branches.iter().enumerate() {
                let (from, to) = (bus_index[l.from_bus.as_str()], bus_index[l.to_bus.as_str()]);
                let delivered = 1.0 - CepConfig::loss_factor(kappa, l.r);
                let cap = if reinforce[li].is_some() { l.rating * mult } else { l.rating };
                for (dir, (src, dst)) in [("fwd", (from, to)), ("bwd", (to, from))] {
                    let f = m.add_var(
                        format!("flow_{dir}.{w}.{h}.{}", l.id),
                        0.0,
                        cap,
                        VarKind::Continuous,
                        0.0,
                        sym(&l.id, &format!("flow_{dir}"), Some(h), day),
                    );
                    if let Some(y) = reinforce[li] {
                        m.le(
                            format!("rating_{dir}.{w}.{h}.{}", l.id),
                            vec![(f, 1.0), (y, -l.rating * (mult - 1.0))],
                            l.rating,
                        );
                    }
                    if src == dst {
                        bal[src].push((f, delivered - 1.0));
                    } else {
                        bal[src].push((f, -1.0));
                        bal[dst].push((f, delivered));
                    }
                }
            }
            for (b, bus) in net.buses.iter().enumerate() {
                let d = load[b][h];
                total_load += d;
                if d > 0.0 {
                    let v = m.add_var(
                        format!("shed.{w}.{h}.{}", bus.id),
                        0.0,
                        d,
                        VarKind::Continuous,
                        weight * cfg.shed_penalty,
                        sym(&bus.id, "shed", Some(h), day),
                    );
                    bal[b].push((v, 1.0));
                    rps_terms.push((v, cfg.rps_target));
                }
                m.equality(format!("bal.{w}.{h}.{}", bus.id), std::mem::take(&mut bal[b]), d);
            }
        }
        for (gi, g) in net.generators.iter().enumerate() {
            if let Some(budget) = hydro_budget[gi] {
                m.le(format!("hydro.{w}.{}", g.id), std::mem::take(&mut hydro_terms[gi]), budget);
            }
        }
        let v = m.add_var(
            format!("rpsv.{w}"),
            0.0,
            f64::INFINITY,
            VarKind::Continuous,
            weight * cfg.rps_penalty,
            Some(Symbol {
                element: day.id.clone(),
                role: "rps_violation".into(),
                hour: None,
                scenario: Some(day.id.clone()),
            }),
        );
        rps_terms.push((v, 1.0));
        m.ge(format!("rps.{w}"), rps_terms, cfg.rps_target * total_load);
    }
    Ok(m)
}
