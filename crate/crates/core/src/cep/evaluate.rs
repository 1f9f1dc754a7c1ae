use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_deterministic_cep, fix_portfolio, CepConfig, Portfolio};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::milp::MilpInstance;
use crate::scenarios::{ScenarioDay, HOURS};
use crate::solver::{MilpSolver, Solution};

/// Network-wide hourly operations of one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationalDetail {
    pub scenario: String,
    pub probability: f64,
    /// MW demanded per hour.
    pub load: [f64; HOURS],
    /// MW shed per hour, summed over buses.
    pub shed: [f64; HOURS],
    /// MW of renewable dispatch per hour.
    pub renewable: [f64; HOURS],
    /// MW of all dispatch per hour.
    pub dispatch: [f64; HOURS],
    pub rps_violation: f64,
    /// Unscaled operating cost of the day, $: variable cost plus penalties.
    pub operating_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: String,
    pub probability: f64,
    /// Objective of the day's model with the portfolio fixed: capex plus the
    /// day's operating cost scaled to a year.
    pub objective: f64,
    pub detail: OperationalDetail,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// `capex + Σ p_ω · annual operating cost_ω`.
    pub expected_cost: f64,
    pub capex: f64,
    /// In scenario order.
    pub scenarios: Vec<ScenarioOutcome>,
}

/// Per-day operations read from a solved CEP instance (deterministic or
/// extensive form) through its symbol table.
pub fn operational_details(
    net: &Network,
    days: &[ScenarioDay],
    cfg: &CepConfig,
    m: &MilpInstance,
    sol: &Solution,
) -> Result<Vec<OperationalDetail>> {
    let renewable: HashMap<&str, (bool, f64)> = net
        .generators
        .iter()
        .map(|g| (g.id.as_str(), (g.is_renewable, g.variable_cost)))
        .chain(net.candidates.iter().map(|c| (c.id.as_str(), (c.is_renewable, c.variable_cost))))
        .collect();
    let mut out: Vec<OperationalDetail> = Vec::with_capacity(days.len());
    let mut slot = HashMap::new();
    for d in days {
        let mut load = [0.0; HOURS];
        for l in &net.loads {
            let p = d.load_profile(&l.profile_key)?;
            for h in 0..HOURS {
                load[h] += l.peak * p[h];
            }
        }
        slot.insert(d.id.as_str(), out.len());
        out.push(OperationalDetail {
            scenario: d.id.clone(),
            probability: d.probability,
            load,
            shed: [0.0; HOURS],
            renewable: [0.0; HOURS],
            dispatch: [0.0; HOURS],
            rps_violation: 0.0,
            operating_cost: 0.0,
        });
    }
    for (v, &x) in m.variables.iter().zip(&sol.values) {
        let Some(s) = &v.symbol else { continue };
        let Some(scen) = &s.scenario else { continue };
        let &i = slot
            .get(scen.as_str())
            .ok_or_else(|| Error::Model(format!("column `{}` belongs to unknown day `{scen}`", v.name)))?;
        let d = &mut out[i];
        let h = s.hour.map(|h| h as usize);
        match (s.role.as_str(), h) {
            ("gen" | "cgen", Some(h)) => {
                let (ren, cost) = renewable[s.element.as_str()];
                d.dispatch[h] += x;
                if ren {
                    d.renewable[h] += x;
                }
                d.operating_cost += cost * x;
            }
            ("shed", Some(h)) => {
                d.shed[h] += x;
                d.operating_cost += cfg.shed_penalty * x;
            }
            ("rps_violation", _) => {
                d.rps_violation += x;
                d.operating_cost += cfg.rps_penalty * x;
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Expected cost of a fixed portfolio: every day's operational LP is solved
/// on its own (in parallel) with all investment columns fixed.
pub fn evaluate_portfolio(
    net: &Network,
    x: &Portfolio,
    days: &[ScenarioDay],
    cfg: &CepConfig,
    solver: &dyn MilpSolver,
) -> Result<Evaluation> {
    x.check(net)?;
    if days.is_empty() {
        return Err(Error::Scenario("empty scenario set".into()));
    }
    let capex = x.capex(net);
    let outcomes: Vec<ScenarioOutcome> = days
        .par_iter()
        .map(|day| {
            let mut m = build_deterministic_cep(net, day, cfg)?;
            fix_portfolio(&mut m, net, x)?;
            let sol = solver.solve(&m, cfg.mip_gap_step2, cfg.time_limit_step2)?;
            let objective = sol
                .objective
                .filter(|_| sol.status.has_solution())
                .ok_or_else(|| Error::Solver(format!("day {}: no solution ({})", day.id, sol.status.as_str())))?;
            let mut detail = operational_details(net, &[day.with_probability(1.0)], cfg, &m, &sol)?
                .pop()
                .expect("one day");
            detail.probability = day.probability;
            Ok(ScenarioOutcome {
                scenario: day.id.clone(),
                probability: day.probability,
                objective,
                detail,
                wall_time: sol.wall_time,
            })
        })
        .collect::<Result<_>>()?;
    let expected_cost = capex + outcomes.iter().map(|o| o.probability * (o.objective - capex)).sum::<f64>();
    Ok(Evaluation {
        expected_cost,
        capex,
        scenarios: outcomes,
    })
}
