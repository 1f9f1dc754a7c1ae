use std::fmt;

use serde::{Deserialize, Serialize};

use gridfold::cep::Portfolio;
use gridfold::metrics::{DeltaTable, ErmmReport, ReliabilityReport};
use gridfold::reduction::{ReductionConfig, ReductionStats};
use gridfold::solver::SolveStatus;
use gridfold::two_step::MappingStrategy;

/// One two-step pipeline: a single day, or every day in stochastic mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    /// Summed probability of the days the case covers.
    pub probability: f64,
    pub f_xstar: f64,
    pub f_xprime: f64,
    pub ermm: f64,
    pub baseline_status: SolveStatus,
    pub step1_status: SolveStatus,
    pub step2_status: SolveStatus,
    pub baseline_time: f64,
    pub step1_time: f64,
    pub step2_time: f64,
    pub baseline: Portfolio,
    pub mapped: Portfolio,
    pub reliability: ReliabilityReport,
}

impl CaseResult {
    pub fn statuses(&self) -> [SolveStatus; 3] {
        [self.baseline_status, self.step1_status, self.step2_status]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSummary {
    pub median: f64,
    pub average: f64,
}

impl TimeSummary {
    pub fn of(mut times: Vec<f64>) -> Self {
        if times.is_empty() {
            return Self::default();
        }
        times.sort_by(f64::total_cmp);
        let n = times.len();
        let median = if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) };
        Self {
            median,
            average: times.iter().sum::<f64>() / n as f64,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timing {
    pub reduction: f64,
    pub baseline: TimeSummary,
    pub step1: TimeSummary,
    pub step2: TimeSummary,
    /// Baseline and step solves stopped by the time limit.
    pub time_limit_hits: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStepReport {
    pub reduction: ReductionConfig,
    pub strategy: MappingStrategy,
    pub stochastic: bool,
    pub stats: ReductionStats,
    pub cases: Vec<CaseResult>,
    pub failures: Vec<Failure>,
    pub ermm: Option<ErmmReport>,
    pub reliability: Option<ReliabilityReport>,
    pub investment_delta: Option<DeltaTable>,
    pub timing: Timing,
}

impl TwoStepReport {
    /// True when no case failed and every solve finished optimal or within
    /// its gap.
    pub fn clean(&self) -> bool {
        self.failures.is_empty()
            && self
                .cases
                .iter()
                .flat_map(|c| c.statuses())
                .all(|s| matches!(s, SolveStatus::Optimal | SolveStatus::FeasibleGap))
    }
}

/// The serialized name of a unit enum variant.
fn name(v: &impl Serialize) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl fmt::Display for TwoStepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.reduction.distance_km;
        writeln!(
            f,
            "two-step, D = {d} km, {} reduction{}, map {:?}, transmission {}, {}",
            name(&self.reduction.mode),
            if self.reduction.tighten { " (tightened)" } else { "" },
            self.strategy.gen_storage,
            name(&self.strategy.transmission),
            if self.stochastic { "stochastic" } else { "per-day" }
        )?;
        writeln!(f, "\n{}", self.stats)?;
        if let Some(e) = &self.ermm {
            writeln!(f, "\n{e}")?;
        }
        if let Some(r) = &self.reliability {
            writeln!(f, "\nmapped portfolio\n{r}")?;
        }
        if let Some(t) = &self.investment_delta {
            write!(f, "\ninvestment, baseline vs mapped (MW)\n{t}")?;
        }
        let t = &self.timing;
        writeln!(f, "\nsolve time (s)     median     average")?;
        for (name, s) in [("baseline", &t.baseline), ("step 1", &t.step1), ("step 2", &t.step2)] {
            writeln!(f, "{name:<16}{:>10.3}{:>12.3}", s.median, s.average)?;
        }
        writeln!(f, "reduction {:.3}s, {} solves hit the time limit", t.reduction, t.time_limit_hits)?;
        for fail in &self.failures {
            writeln!(f, "FAILED {}: {}", fail.id, fail.error)?;
        }
        Ok(())
    }
}
