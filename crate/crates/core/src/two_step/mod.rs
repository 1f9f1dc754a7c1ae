//! The two-step framework: solve the CEP on a reduced network, map its
//! investments back onto the original network, re-solve there.

mod mapping;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use mapping::{
    apply_mapping, apportion, map_investments, map_transmission, GenStorageMap, GroupTotal, InvestmentMapping,
    LineFixing, MappingStrategy, TransmissionMap, GROUP_SLACK_MW,
};

use crate::cep::{build_deterministic_cep, build_stochastic_cep, CepConfig, Portfolio};
use crate::error::{Error, Result};
use crate::grid::Network;
use crate::milp::MilpInstance;
use crate::reduction::{reduce_network, tighten_candidates, MergeMap, ReductionConfig};
use crate::scenarios::ScenarioDay;
use crate::solver::{MilpSolver, Solution};

/// A solved CEP and the portfolio read from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CepOutcome {
    pub solution: Solution,
    pub portfolio: Portfolio,
    /// Seconds spent building the instance.
    pub build_time: f64,
    /// Seconds spent in the solver.
    pub solve_time: f64,
}

impl CepOutcome {
    pub fn objective(&self) -> f64 {
        self.solution.objective.unwrap_or(f64::NAN)
    }
}

/// One day gives the deterministic model, several the extensive form.
pub fn build_cep(net: &Network, days: &[ScenarioDay], cfg: &CepConfig) -> Result<MilpInstance> {
    match days {
        [day] => build_deterministic_cep(net, day, cfg),
        _ => build_stochastic_cep(net, days, cfg),
    }
}

fn solve_built(
    net: &Network,
    m: &MilpInstance,
    solver: &dyn MilpSolver,
    gap: f64,
    time_limit: f64,
    label: &str,
    build_time: f64,
) -> Result<CepOutcome> {
    let start = Instant::now();
    let solution = solver.solve(m, gap, time_limit)?;
    let solve_time = start.elapsed().as_secs_f64();
    if !solution.status.has_solution() {
        // Shedding columns make every instance feasible.
        return Err(Error::Solver(format!(
            "{label} CEP returned no solution (status {})",
            solution.status.as_str()
        )));
    }
    let portfolio = Portfolio::from_solution(net, m, &solution, label)?;
    Ok(CepOutcome {
        solution,
        portfolio,
        build_time,
        solve_time,
    })
}

/// Builds and solves the CEP of `net` over `days`.
pub fn solve_cep(
    net: &Network,
    days: &[ScenarioDay],
    cfg: &CepConfig,
    solver: &dyn MilpSolver,
    gap: f64,
    time_limit: f64,
    label: &str,
) -> Result<CepOutcome> {
    let start = Instant::now();
    let m = build_cep(net, days, cfg)?;
    solve_built(net, &m, solver, gap, time_limit, label, start.elapsed().as_secs_f64())
}

/// A reduced network with the map that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub network: Network,
    pub merge_map: MergeMap,
}

impl Reduced {
    /// Reduces `original`, tightening candidate limits when the config asks.
    pub fn compute(original: &Network, cfg: &ReductionConfig) -> Result<Self> {
        let (mut network, merge_map) = reduce_network(original, cfg)?;
        if cfg.tighten {
            network = tighten_candidates(&network, original, &merge_map)?;
        }
        Ok(Self { network, merge_map })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepResult {
    pub reduced: Reduced,
    pub step1: CepOutcome,
    pub investments: InvestmentMapping,
    pub lines: LineFixing,
    pub step2: CepOutcome,
    /// Step (2) objective, the cost of the mapped portfolio.
    pub f_xprime: f64,
    pub reduction_time: f64,
}

/// Step (2) of a mapped portfolio, sharing a Step (1) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedSolve {
    pub investments: InvestmentMapping,
    pub lines: LineFixing,
    pub outcome: CepOutcome,
}

/// Maps a Step (1) portfolio onto `original` and re-solves there. `cfg` must
/// already carry the loss coefficient both steps share.
pub fn solve_step2(
    original: &Network,
    reduced: &Reduced,
    step1: &CepOutcome,
    days: &[ScenarioDay],
    cfg: &CepConfig,
    strategy: MappingStrategy,
    solver: &dyn MilpSolver,
) -> Result<MappedSolve> {
    let investments = map_investments(&step1.portfolio, &reduced.merge_map, strategy.gen_storage, original)?;
    let lines = map_transmission(&step1.portfolio, &reduced.merge_map, strategy.transmission, original)?;
    let start = Instant::now();
    let mut m = build_cep(original, days, cfg)?;
    apply_mapping(&mut m, original, &investments, &lines)?;
    let build_time = start.elapsed().as_secs_f64();
    let outcome = solve_built(
        original,
        &m,
        solver,
        cfg.mip_gap_step2,
        cfg.time_limit_step2,
        "original",
        build_time,
    )?;
    Ok(MappedSolve {
        investments,
        lines,
        outcome,
    })
}

/// Runs both steps. The loss coefficient, when unset, is derived from the
/// original network and shared by both models.
pub fn run_two_step(
    original: &Network,
    reduced: Reduced,
    days: &[ScenarioDay],
    cep_cfg: &CepConfig,
    strategy: MappingStrategy,
    solver: &dyn MilpSolver,
) -> Result<TwoStepResult> {
    let cfg = cep_cfg.resolved(original);
    let step1 = solve_step1(&reduced, days, &cfg, solver)?;
    let step2 = solve_step2(original, &reduced, &step1, days, &cfg, strategy, solver)?;
    Ok(TwoStepResult {
        reduced,
        f_xprime: step2.outcome.objective(),
        step1,
        investments: step2.investments,
        lines: step2.lines,
        step2: step2.outcome,
        reduction_time: 0.0,
    })
}

/// Step (1): the CEP of the reduced network. `cfg` must already carry the
/// loss coefficient of the original network.
pub fn solve_step1(reduced: &Reduced, days: &[ScenarioDay], cfg: &CepConfig, solver: &dyn MilpSolver) -> Result<CepOutcome> {
    solve_cep(
        &reduced.network,
        days,
        cfg,
        solver,
        cfg.mip_gap_step1,
        cfg.time_limit_step1,
        "reduced",
    )
}

/// [`run_two_step`] starting from a reduction config.
pub fn run_two_step_reducing(
    original: &Network,
    red_cfg: &ReductionConfig,
    days: &[ScenarioDay],
    cep_cfg: &CepConfig,
    strategy: MappingStrategy,
    solver: &dyn MilpSolver,
) -> Result<TwoStepResult> {
    let start = Instant::now();
    let reduced = Reduced::compute(original, red_cfg)?;
    let reduction_time = start.elapsed().as_secs_f64();
    let mut r = run_two_step(original, reduced, days, cep_cfg, strategy, solver)?;
    r.reduction_time = reduction_time;
    Ok(r)
}
