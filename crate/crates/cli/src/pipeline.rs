use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gridfold::cep::{operational_details, CepConfig, OperationalDetail, Portfolio};
use gridfold::grid::Network;
use gridfold::metrics::{ermm, investment_delta, reliability_metrics, ErmmReport, TechGrouping};
use gridfold::scenarios::ScenarioDay;
use gridfold::solver::{MilpSolver, SolveStatus};
use gridfold::two_step::{build_cep, solve_cep, solve_step1, solve_step2, CepOutcome, MappingStrategy, Reduced};

use crate::report::{CaseResult, Failure, TimeSummary, Timing};

/// A solved full-network CEP, as stored by `baseline`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub id: String,
    pub objective: f64,
    pub status: SolveStatus,
    pub solve_time: f64,
    pub portfolio: Portfolio,
}

/// The day sets solved as separate problems: one per day, or all together.
pub fn cases(days: &[ScenarioDay], stochastic: bool) -> Vec<(String, Vec<ScenarioDay>)> {
    if stochastic {
        vec![("all".to_string(), days.to_vec())]
    } else {
        days.iter().map(|d| (d.id.clone(), vec![d.clone()])).collect()
    }
}

pub fn solve_baseline(
    id: &str,
    net: &Network,
    days: &[ScenarioDay],
    cfg: &CepConfig,
    solver: &dyn MilpSolver,
) -> Result<BaselineRecord> {
    let o = solve_cep(net, days, cfg, solver, cfg.mip_gap_step2, cfg.time_limit_step2, "original")?;
    Ok(BaselineRecord {
        id: id.to_string(),
        objective: o.objective(),
        status: o.solution.status,
        solve_time: o.solve_time,
        portfolio: o.portfolio,
    })
}

/// Operations of a solved original-network CEP, each day carrying its own
/// probability.
fn details(net: &Network, days: &[ScenarioDay], cfg: &CepConfig, outcome: &CepOutcome) -> Result<Vec<OperationalDetail>> {
    let solved: Vec<ScenarioDay> = if days.len() == 1 { vec![days[0].with_probability(1.0)] } else { days.to_vec() };
    let m = build_cep(net, &solved, cfg)?;
    let mut out = operational_details(net, &solved, cfg, &m, &outcome.solution)?;
    for (d, day) in out.iter_mut().zip(days) {
        d.probability = day.probability;
    }
    Ok(out)
}

pub struct TwoStepInputs<'a> {
    pub original: &'a Network,
    pub reduced: &'a Reduced,
    pub cfg: &'a CepConfig,
    pub strategy: MappingStrategy,
    pub solver: &'a dyn MilpSolver,
    pub baselines: &'a BTreeMap<String, BaselineRecord>,
}

fn run_case(inp: &TwoStepInputs, id: &str, days: &[ScenarioDay]) -> Result<(CaseResult, Vec<OperationalDetail>)> {
    let base = match inp.baselines.get(id) {
        Some(b) => b.clone(),
        None => solve_baseline(id, inp.original, days, inp.cfg, inp.solver).context("baseline")?,
    };
    let step1 = solve_step1(inp.reduced, days, inp.cfg, inp.solver).context("step 1")?;
    let step2 = solve_step2(inp.original, inp.reduced, &step1, days, inp.cfg, inp.strategy, inp.solver)
        .context("step 2")?;
    let details = details(inp.original, days, inp.cfg, &step2.outcome)?;
    let reliability = reliability_metrics(&details, inp.cfg.days_per_year)?;
    let f_xprime = step2.outcome.objective();
    Ok((
        CaseResult {
            id: id.to_string(),
            probability: days.iter().map(|d| d.probability).sum(),
            f_xstar: base.objective,
            f_xprime,
            ermm: ermm(f_xprime, base.objective)?,
            baseline_status: base.status,
            step1_status: step1.solution.status,
            step2_status: step2.outcome.solution.status,
            baseline_time: base.solve_time,
            step1_time: step1.solve_time,
            step2_time: step2.outcome.solve_time,
            baseline: base.portfolio,
            mapped: step2.outcome.portfolio,
            reliability,
        },
        details,
    ))
}

pub struct Batch {
    pub cases: Vec<CaseResult>,
    pub failures: Vec<Failure>,
    pub details: Vec<OperationalDetail>,
}

/// Runs every case on the worker pool. Each finished case is written to
/// `<case_dir>/<id>.json`; a failed case is recorded and the rest go on.
/// Results come back in input order.
pub fn run_batch(inp: &TwoStepInputs, cases: &[(String, Vec<ScenarioDay>)], case_dir: &Path) -> Result<Batch> {
    std::fs::create_dir_all(case_dir).with_context(|| format!("creating {}", case_dir.display()))?;
    let results: Vec<Result<(CaseResult, Vec<OperationalDetail>), Failure>> = cases
        .par_iter()
        .map(|(id, days)| {
            let fail = |e: anyhow::Error| Failure {
                id: id.clone(),
                error: format!("{e:#}"),
            };
            let r = run_case(inp, id, days).map_err(fail)?;
            let path = case_dir.join(format!("{id}.json"));
            let text = serde_json::to_string_pretty(&r.0).map_err(|e| fail(e.into()))?;
            std::fs::write(&path, text).map_err(|e| fail(anyhow!("writing {}: {e}", path.display())))?;
            log::info!("case {id}: ERMM {:.4}%", r.0.ermm);
            Ok(r)
        })
        .collect();
    let mut batch = Batch {
        cases: Vec::new(),
        failures: Vec::new(),
        details: Vec::new(),
    };
    for r in results {
        match r {
            Ok((c, d)) => {
                batch.cases.push(c);
                batch.details.extend(d);
            }
            Err(f) => {
                log::error!("case {} failed: {}", f.id, f.error);
                batch.failures.push(f);
            }
        }
    }
    Ok(batch)
}

/// Probability-weighted mean of the cases' portfolios, normalised by the
/// weight the cases cover.
fn mean_portfolio(cases: &[CaseResult], pick: fn(&CaseResult) -> &Portfolio, label: &str) -> Portfolio {
    let weight: f64 = cases.iter().map(|c| c.probability).sum();
    let mut out = Portfolio {
        network: label.to_string(),
        ..Default::default()
    };
    for c in cases {
        let w = c.probability / weight;
        let p = pick(c);
        for (k, v) in &p.gen_build {
            *out.gen_build.entry(k.clone()).or_default() += w * v;
        }
        for (k, v) in &p.storage_build {
            *out.storage_build.entry(k.clone()).or_default() += w * v;
        }
    }
    out
}

/// Aggregate ERMM, reliability and investment tables of a finished batch.
pub fn summarize(
    batch: &Batch,
    original: &Network,
    cfg: &CepConfig,
    exact: bool,
) -> Result<(Option<ErmmReport>, Option<gridfold::metrics::ReliabilityReport>, Option<gridfold::metrics::DeltaTable>)> {
    if batch.cases.is_empty() {
        return Ok((None, None, None));
    }
    let allowance = if exact { 0.0 } else { 2.0 * cfg.mip_gap_step2 };
    let ermm = ErmmReport::new(batch.cases.iter().map(|c| (c.id.clone(), c.ermm)).collect(), allowance)?;
    let reliability = reliability_metrics(&batch.details, cfg.days_per_year)?;
    let techs: Vec<&str> = original.candidates.iter().map(|c| c.tech.as_str()).collect();
    let grouping = TechGrouping::lumped(techs);
    let delta = investment_delta(
        &mean_portfolio(&batch.cases, |c| &c.baseline, "baseline"),
        &mean_portfolio(&batch.cases, |c| &c.mapped, "mapped"),
        original,
        &grouping,
    );
    Ok((Some(ermm), Some(reliability), Some(delta)))
}

pub fn timing(batch: &Batch, reduction: f64) -> Timing {
    let pick = |f: fn(&CaseResult) -> f64| TimeSummary::of(batch.cases.iter().map(f).collect());
    Timing {
        reduction,
        baseline: pick(|c| c.baseline_time),
        step1: pick(|c| c.step1_time),
        step2: pick(|c| c.step2_time),
        time_limit_hits: batch
            .cases
            .iter()
            .flat_map(|c| c.statuses())
            .filter(|s| *s == SolveStatus::TimeLimit)
            .count(),
    }
}
