//! Solver-agnostic MILP instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

/// Ties a column back to the network element it models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub element: String,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hour: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Symbol>,
}

/// `lower ≤ Σ coef·x ≤ upper`; either side may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// A minimization MILP.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpInstance {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl MilpInstance {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
        objective: f64,
        symbol: Option<Symbol>,
    ) -> VarId {
        let name = name.into();
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
            objective,
            symbol,
        });
        VarId(id)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        lower: f64,
        upper: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms: terms.into_iter().filter(|t| t.1 != 0.0).map(|(v, a)| (v.0, a)).collect(),
            lower,
            upper,
        });
        self.constraints.len() - 1
    }

    pub fn le(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> usize {
        self.add_constraint(name, terms, f64::NEG_INFINITY, rhs)
    }

    pub fn ge(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> usize {
        self.add_constraint(name, terms, rhs, f64::INFINITY)
    }

    pub fn equality(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, rhs: f64) -> usize {
        self.add_constraint(name, terms, rhs, rhs)
    }

    pub fn var_index(&mut self, name: &str) -> Option<usize> {
        if self.index.len() != self.variables.len() {
            self.rebuild_index();
        }
        self.index.get(name).copied()
    }

    /// Name lookup without the cached index.
    pub fn find_var(&self, name: &str) -> Option<usize> {
        if self.index.len() == self.variables.len() {
            self.index.get(name).copied()
        } else {
            self.variables.iter().position(|v| v.name == name)
        }
    }

    pub fn rebuild_index(&mut self) {
        self.index = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        let v = &mut self.variables[var];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn fix(&mut self, var: usize, value: f64) {
        self.set_bounds(var, value, value);
    }

    pub fn integer_vars(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&j| self.variables[j].kind.is_integral())
            .collect()
    }

    /// Number of integer assignments, saturating at `u64::MAX`. `None` when an
    /// integer variable has an infinite bound.
    pub fn lattice_size(&self) -> Option<u64> {
        let mut total: u64 = 1;
        for j in self.integer_vars() {
            let v = &self.variables[j];
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return None;
            }
            let lo = (v.lower - 1e-9).ceil();
            let hi = (v.upper + 1e-9).floor();
            let count = if hi < lo { 0 } else { (hi - lo) as u64 + 1 };
            total = total.saturating_mul(count);
        }
        Some(total)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, x)| v.objective * x).sum()
    }

    /// Largest bound or row violation of `x`, and its integrality violation.
    pub fn violation(&self, x: &[f64]) -> (f64, f64) {
        let mut worst: f64 = 0.0;
        let mut frac: f64 = 0.0;
        for (v, &val) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - val).max(val - v.upper);
            if v.kind.is_integral() {
                frac = frac.max((val - val.round()).abs());
            }
        }
        for c in &self.constraints {
            let a = c.activity(x);
            worst = worst.max(c.lower - a).max(a - c.upper);
        }
        (worst, frac)
    }

    /// Structural checks: unique names, in-range references, finite data.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Model(format!("duplicate variable `{}`", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || !v.objective.is_finite() {
                return Err(Error::Model(format!("variable `{}` has non-finite data", v.name)));
            }
        }
        let mut rows = std::collections::HashSet::new();
        for c in &self.constraints {
            if !rows.insert(c.name.as_str()) {
                return Err(Error::Model(format!("duplicate constraint `{}`", c.name)));
            }
            if c.lower.is_nan() || c.upper.is_nan() {
                return Err(Error::Model(format!("constraint `{}` has NaN bound", c.name)));
            }
            for &(j, a) in &c.terms {
                if j >= self.variables.len() {
                    return Err(Error::Model(format!("constraint `{}` references column {j}", c.name)));
                }
                if !a.is_finite() {
                    return Err(Error::Model(format!("constraint `{}` has non-finite coefficient", c.name)));
                }
            }
        }
        Ok(())
    }
}
