//! Nodal power-system representation.
//!
//! A [`Network`] is a plain value: buses, branches (lines and transformers),
//! existing generators, storage and loads, plus investment candidates. Nothing
//! in the crate mutates a network in place; reduction and tightening return new
//! values.

mod geo;
mod io;
mod topology;
mod validate;

use serde::{Deserialize, Serialize};

pub use geo::{haversine_distance, EARTH_RADIUS_KM};
pub use io::{load_network, network_from_str, network_to_string, save_network, NETWORK_FORMAT};
pub use topology::{bus_degree, degree_map, line_components, radial_lines};
pub use validate::{validate_network, Issue, Severity, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    /// Degrees north, in [-90, 90].
    pub latitude: f64,
    /// Degrees east, in [-180, 180].
    pub longitude: f64,
}

impl GeoCoord {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        Self {
            latitude,
            longitude,
        }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.latitude) && (-180.0..=180.0).contains(&self.longitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub location: GeoCoord,
    #[serde(default)]
    pub is_substation: bool,
    pub base_kv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Line,
    Transformer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub kind: BranchKind,
    /// Series resistance, per unit.
    pub r: f64,
    /// Series reactance, per unit.
    pub x: f64,
    /// Thermal rating in MW.
    pub rating: f64,
    /// Annualized cost of reinforcing this branch, $/yr.
    #[serde(default)]
    pub reinforce_cost: f64,
    #[serde(default)]
    pub reinforcible: bool,
}

impl Branch {
    pub fn is_line(&self) -> bool {
        self.kind == BranchKind::Line
    }

    pub fn touches(&self, bus: &str) -> bool {
        self.from_bus == bus || self.to_bus == bus
    }

    /// The endpoint opposite `bus`, if `bus` is an endpoint.
    pub fn other_end(&self, bus: &str) -> Option<&str> {
        if self.from_bus == bus {
            Some(&self.to_bus)
        } else if self.to_bus == bus {
            Some(&self.from_bus)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub tech: String,
    /// Nameplate MW.
    pub capacity: f64,
    /// $/MWh.
    #[serde(default)]
    pub variable_cost: f64,
    #[serde(default)]
    pub is_renewable: bool,
    /// Hourly availability series in the scenario data. `None` means always
    /// fully available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability_key: Option<String>,
    /// Dispatch is limited by a daily energy budget from the scenario data.
    #[serde(default)]
    pub is_hydro_budgeted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    pub id: String,
    pub bus: String,
    pub power_capacity: f64,
    pub energy_capacity: f64,
    pub round_trip_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: String,
    pub bus: String,
    pub profile_key: String,
    /// MW; the hourly load is `peak × multiplier(profile_key, hour)`.
    pub peak: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Generation,
    Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrality {
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub bus: String,
    pub kind: CandidateKind,
    pub tech: String,
    /// MW per unit; integer candidates are built in whole units.
    pub unit_size: f64,
    pub integrality: Integrality,
    /// Land-use limit in MW.
    pub max_build: f64,
    /// Annualized capital cost, $/MW-yr.
    pub capex: f64,
    #[serde(default)]
    pub variable_cost: f64,
    #[serde(default)]
    pub is_renewable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability_key: Option<String>,
    /// Storage only: energy capacity per MW of power capacity.
    #[serde(default = "default_duration")]
    pub duration_hours: f64,
    /// Storage only.
    #[serde(default = "default_efficiency")]
    pub round_trip_efficiency: f64,
}

fn default_duration() -> f64 {
    4.0
}

fn default_efficiency() -> f64 {
    0.85
}

impl Candidate {
    /// Upper bound on the unit count of an integer candidate. A fractional last
    /// unit is never allowed.
    pub fn max_units(&self) -> u64 {
        if self.unit_size <= 0.0 || self.max_build <= 0.0 {
            return 0;
        }
        // Absorb round-off such as 6.0 / 2.0 = 2.9999999.
        ((self.max_build / self.unit_size) + 1e-9).floor() as u64
    }

    /// Largest buildable MW respecting integrality.
    pub fn max_build_mw(&self) -> f64 {
        match self.integrality {
            Integrality::Integer => self.max_units() as f64 * self.unit_size,
            Integrality::Continuous => self.max_build.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Network {
    #[serde(default)]
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub storage: Vec<Storage>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
}

impl Network {
    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    pub fn lines(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.is_line())
    }

    pub fn transformers(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| !b.is_line())
    }

    /// Great-circle distance between the endpoints of a branch, in km.
    pub fn branch_length_km(&self, branch: &Branch) -> Option<f64> {
        let a = self.bus(&branch.from_bus)?;
        let b = self.bus(&branch.to_bus)?;
        Some(haversine_distance(a.location, b.location))
    }

    pub fn total_peak_load(&self) -> f64 {
        self.loads.iter().map(|l| l.peak).sum()
    }

    pub fn total_generation_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.capacity).sum()
    }
}
