//! Capacity-expansion MILPs over a transport ("pipe and bubble") network.
//!
//! One set of investment columns (candidate builds, line reinforcements) is
//! shared by per-day operational blocks: dispatch, bidirectional branch
//! flows with optional linear losses, storage with cyclic state of charge,
//! penalised load shedding and a penalised renewable-share (RPS) shortfall.
//! Shedding and shortfall columns keep every instance feasible.

mod build;
mod evaluate;
mod portfolio;

use serde::{Deserialize, Serialize};

pub use build::{build_deterministic_cep, build_stochastic_cep, build_var, reinforce_var, BuildTerm};
pub use evaluate::{evaluate_portfolio, operational_details, Evaluation, OperationalDetail, ScenarioOutcome};
pub use portfolio::{fix_portfolio, Portfolio};

use crate::error::{Error, Result};
use crate::grid::Network;

/// Share of a line's flow lost in transit on the median line when the loss
/// coefficient is derived from the network.
pub const MEDIAN_LINE_LOSS: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CepConfig {
    pub rps_target: f64,
    /// $/MWh of renewable shortfall.
    pub rps_penalty: f64,
    /// $/MWh of unserved load.
    pub shed_penalty: f64,
    pub losses_enabled: bool,
    /// Loss per unit of per-unit resistance; derived from the network's median
    /// line resistance when unset.
    pub loss_coefficient: Option<f64>,
    pub reinforcement_multiplier: f64,
    pub mip_gap_step1: f64,
    pub mip_gap_step2: f64,
    /// Seconds.
    pub time_limit_step1: f64,
    pub time_limit_step2: f64,
    /// Scaling of one representative day's operating cost; 365 reads as $/yr.
    pub days_per_year: f64,
}

impl Default for CepConfig {
    fn default() -> Self {
        Self {
            rps_target: 0.6,
            rps_penalty: 500.0,
            shed_penalty: 10_000.0,
            losses_enabled: false,
            loss_coefficient: None,
            reinforcement_multiplier: 2.0,
            mip_gap_step1: 0.01,
            mip_gap_step2: 0.001,
            time_limit_step1: 4.0 * 3600.0,
            time_limit_step2: 4.0 * 3600.0,
            days_per_year: 365.0,
        }
    }
}

impl CepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("cep: {what}")));
        if !(0.0..=1.0).contains(&self.rps_target) {
            return bad("rps_target must lie in [0, 1]");
        }
        if !(self.rps_penalty >= 0.0 && self.shed_penalty >= 0.0) {
            return bad("penalties must be nonnegative");
        }
        if !(self.reinforcement_multiplier > 1.0) || !self.reinforcement_multiplier.is_finite() {
            return bad("reinforcement_multiplier must exceed 1");
        }
        if self.loss_coefficient.is_some_and(|k| !(k >= 0.0 && k.is_finite())) {
            return bad("loss_coefficient must be finite and nonnegative");
        }
        for g in [self.mip_gap_step1, self.mip_gap_step2] {
            if !(g >= 0.0) {
                return bad("MIP gaps must be nonnegative");
            }
        }
        for t in [self.time_limit_step1, self.time_limit_step2] {
            if !(t > 0.0) {
                return bad("time limits must be positive");
            }
        }
        if !(self.days_per_year > 0.0 && self.days_per_year.is_finite()) {
            return bad("days_per_year must be positive");
        }
        Ok(())
    }

    /// Loss coefficient giving [`MEDIAN_LINE_LOSS`] on the median line of
    /// `net`; zero when there are no lines with resistance.
    pub fn derived_loss_coefficient(net: &Network) -> f64 {
        let mut r: Vec<f64> = net.lines().map(|l| l.r).collect();
        if r.is_empty() {
            return 0.0;
        }
        r.sort_by(f64::total_cmp);
        let mid = r.len() / 2;
        let median = if r.len() % 2 == 1 { r[mid] } else { 0.5 * (r[mid - 1] + r[mid]) };
        if median > 0.0 {
            MEDIAN_LINE_LOSS / median
        } else {
            0.0
        }
    }

    /// Pins an unset loss coefficient to the value derived from `reference`,
    /// so that models of different networks share it.
    pub fn resolved(&self, reference: &Network) -> Self {
        let mut c = self.clone();
        if c.loss_coefficient.is_none() {
            c.loss_coefficient = Some(Self::derived_loss_coefficient(reference));
        }
        c
    }

    /// Effective loss coefficient for a model of `net`; zero with losses off.
    pub fn loss_coefficient_for(&self, net: &Network) -> f64 {
        if !self.losses_enabled {
            return 0.0;
        }
        self.loss_coefficient.unwrap_or_else(|| Self::derived_loss_coefficient(net))
    }

    /// Fraction of a branch's flow lost on the way, clamped to [0, 1].
    pub fn loss_factor(kappa: f64, r: f64) -> f64 {
        (kappa * r).clamp(0.0, 1.0)
    }
}
