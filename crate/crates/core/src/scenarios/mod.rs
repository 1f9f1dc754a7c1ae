//! Representative days: hourly availability and load multipliers, daily hydro
//! budgets and scenario probabilities.
//!
//! On disk a scenario set is a directory holding a `manifest` (one
//! `<day id>\t<probability>` row per day after a header) and one
//! `day_<id>.tsv` per day with `hour\tkey\tvalue` rows. Keys are prefixed by
//! their kind: `avail:<availability key>`, `load:<profile key>` and
//! `hydro:<generator id>`; hydro rows use `-` as the hour.

mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use synth::{synth_instance, SynthKnobs, SynthInstance};

use crate::error::{Error, Result};

pub const HOURS: usize = 24;

/// Allowed deviation of the probability sum from one.
pub const PROBABILITY_TOL: f64 = 1e-6;

pub type Profile = [f64; HOURS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDay {
    pub id: String,
    pub probability: f64,
    /// Availability fraction per key and hour.
    #[serde(default)]
    pub availability: BTreeMap<String, Profile>,
    /// Load multiplier per profile key and hour.
    #[serde(default)]
    pub load: BTreeMap<String, Profile>,
    /// MWh per day per hydro generator.
    #[serde(default)]
    pub hydro: BTreeMap<String, f64>,
}

impl ScenarioDay {
    pub fn new(id: impl Into<String>, probability: f64) -> Self {
        Self {
            id: id.into(),
            probability,
            availability: BTreeMap::new(),
            load: BTreeMap::new(),
            hydro: BTreeMap::new(),
        }
    }

    pub fn availability(&self, key: &str) -> Result<&Profile> {
        self.availability
            .get(key)
            .ok_or_else(|| Error::Scenario(format!("day {}: unknown availability key `{key}`", self.id)))
    }

    pub fn load_profile(&self, key: &str) -> Result<&Profile> {
        self.load
            .get(key)
            .ok_or_else(|| Error::Scenario(format!("day {}: unknown load profile `{key}`", self.id)))
    }

    pub fn hydro_budget(&self, generator: &str) -> Result<f64> {
        self.hydro
            .get(generator)
            .copied()
            .ok_or_else(|| Error::Scenario(format!("day {}: no hydro budget for `{generator}`", self.id)))
    }

    pub fn with_probability(&self, p: f64) -> Self {
        Self {
            probability: p,
            ..self.clone()
        }
    }

    fn check_values(&self) -> Result<()> {
        check_id(&self.id)?;
        if !(self.probability > 0.0 && self.probability <= 1.0) {
            return Err(Error::Scenario(format!("day {}: probability {} outside (0, 1]", self.id, self.probability)));
        }
        for (k, p) in &self.availability {
            if let Some(h) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Scenario(format!("day {}: availability `{k}` hour {h} outside [0, 1]", self.id)));
            }
        }
        for (k, p) in &self.load {
            if let Some(h) = p.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Scenario(format!("day {}: load `{k}` hour {h} is negative", self.id)));
            }
        }
        for (g, b) in &self.hydro {
            if !(b.is_finite() && *b >= 0.0) {
                return Err(Error::Scenario(format!("day {}: hydro budget for `{g}` is negative", self.id)));
            }
        }
        Ok(())
    }
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == '/' || c == '\\') {
        return Err(Error::Scenario(format!("invalid day id `{id}`")));
    }
    Ok(())
}

/// Validates a set: non-empty, unique ids, values in range and probabilities
/// summing to one within [`PROBABILITY_TOL`]; the probabilities are then
/// rescaled to sum to one exactly.
pub fn validate_scenarios(days: &mut [ScenarioDay]) -> Result<()> {
    if days.is_empty() {
        return Err(Error::Scenario("empty scenario set".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for d in days.iter() {
        d.check_values()?;
        if !seen.insert(d.id.as_str()) {
            return Err(Error::Scenario(format!("duplicate day id `{}`", d.id)));
        }
    }
    let total: f64 = days.iter().map(|d| d.probability).sum();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::Scenario(format!("probabilities sum to {total}, expected 1")));
    }
    for d in days.iter_mut() {
        d.probability /= total;
    }
    Ok(())
}

fn parse_err(file: &Path, line: usize, msg: impl ToString) -> Error {
    Error::parse(format!("{}:{line}", file.display()), msg)
}

fn parse_day(id: &str, probability: f64, path: &Path) -> Result<ScenarioDay> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut day = ScenarioDay::new(id, probability);
    let mut seen: BTreeMap<String, [bool; HOURS]> = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (ln == 1 && line.starts_with("hour")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [hour, key, value] = cols[..] else {
            return Err(parse_err(path, ln, "expected `hour<TAB>key<TAB>value`"));
        };
        let v: f64 = value
            .parse()
            .map_err(|_| parse_err(path, ln, format!("bad number `{value}`")))?;
        let (kind, name) = key
            .split_once(':')
            .ok_or_else(|| parse_err(path, ln, format!("key `{key}` lacks an avail:/load:/hydro: prefix")))?;
        if kind == "hydro" {
            if hour != "-" {
                return Err(parse_err(path, ln, "hydro rows take `-` as the hour"));
            }
            if day.hydro.insert(name.to_string(), v).is_some() {
                return Err(parse_err(path, ln, format!("duplicate key `{key}`")));
            }
            continue;
        }
        let h: usize = hour
            .parse()
            .ok()
            .filter(|h| *h < HOURS)
            .ok_or_else(|| parse_err(path, ln, format!("hour `{hour}` outside 0..23")))?;
        let target = match kind {
            "avail" => &mut day.availability,
            "load" => &mut day.load,
            other => return Err(parse_err(path, ln, format!("unknown key kind `{other}`"))),
        };
        target.entry(name.to_string()).or_insert([0.0; HOURS])[h] = v;
        let flags = seen.entry(key.to_string()).or_insert([false; HOURS]);
        if std::mem::replace(&mut flags[h], true) {
            return Err(parse_err(path, ln, format!("duplicate hour {h} for `{key}`")));
        }
    }
    for (key, flags) in &seen {
        if let Some(h) = flags.iter().position(|f| !f) {
            return Err(Error::Scenario(format!("day {id}: key `{key}` is missing hour {h}")));
        }
    }
    Ok(day)
}

pub fn load_scenarios(dir: impl AsRef<Path>) -> Result<Vec<ScenarioDay>> {
    let dir = dir.as_ref();
    let manifest = dir.join("manifest");
    let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut entries = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (ln == 0 && line.starts_with("day")) {
            continue;
        }
        let mut cols = line.split('\t').map(str::trim);
        let (Some(id), Some(p), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(&manifest, ln + 1, "expected `day<TAB>probability`"));
        };
        check_id(id)?;
        let p: f64 = p.parse().map_err(|_| parse_err(&manifest, ln + 1, format!("bad probability `{p}`")))?;
        entries.push((id.to_string(), p));
    }
    let mut days = entries
        .iter()
        .map(|(id, p)| parse_day(id, *p, &dir.join(format!("day_{id}.tsv"))))
        .collect::<Result<Vec<_>>>()?;
    validate_scenarios(&mut days)?;
    Ok(days)
}

fn day_text(day: &ScenarioDay) -> String {
    let mut out = String::from("hour\tkey\tvalue\n");
    for (prefix, map) in [("avail", &day.availability), ("load", &day.load)] {
        for (k, p) in map {
            for (h, v) in p.iter().enumerate() {
                writeln!(out, "{h}\t{prefix}:{k}\t{v}").unwrap();
            }
        }
    }
    for (g, b) in &day.hydro {
        writeln!(out, "-\thydro:{g}\t{b}").unwrap();
    }
    out
}

pub fn save_scenarios(dir: impl AsRef<Path>, days: &[ScenarioDay]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("day\tprobability\n");
    for d in days {
        check_id(&d.id)?;
        writeln!(manifest, "{}\t{}", d.id, d.probability).unwrap();
        let path = dir.join(format!("day_{}.tsv", d.id));
        std::fs::write(&path, day_text(d)).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join("manifest");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}
