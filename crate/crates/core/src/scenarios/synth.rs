use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScenarioDay, HOURS};
use crate::error::{Error, Result};
use crate::grid::{
    Branch, BranchKind, Bus, Candidate, CandidateKind, GeoCoord, Generator, Integrality, Load, Network, Storage,
};

const KM_PER_DEGREE: f64 = 111.194_926_644_558_73;
const ORIGIN: (f64, f64) = (35.0, -100.0);

/// Shape parameters for [`synth_instance`]. The defaults give small
/// instances whose integer lattice stays within the oracle's reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthKnobs {
    /// Number of geographic clusters; `None` picks about one per four buses.
    pub clusters: Option<usize>,
    /// Every bus lies within this distance of its cluster centre.
    pub cluster_radius_km: f64,
    /// Distance between neighbouring cluster centres.
    pub cluster_spacing_km: f64,
    /// Buses attached to their cluster only through a transformer;
    /// `None` picks about one per ten buses.
    pub transformer_nodes: Option<usize>,
    /// Existing capacity as a fraction of peak load.
    pub existing_fraction: f64,
    pub candidates: usize,
    /// How many candidates are built in whole units.
    pub integer_candidates: usize,
    pub max_units: u64,
    pub reinforcible_lines: usize,
    pub load_noise: f64,
    /// Existing storage units.
    pub storage_units: usize,
    pub hydro: bool,
}

impl Default for SynthKnobs {
    fn default() -> Self {
        Self {
            clusters: None,
            cluster_radius_km: 1.5,
            cluster_spacing_km: 40.0,
            transformer_nodes: None,
            existing_fraction: 0.8,
            candidates: 4,
            integer_candidates: 1,
            max_units: 2,
            reinforcible_lines: 2,
            load_noise: 0.1,
            storage_units: 1,
            hydro: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthInstance {
    pub network: Network,
    pub days: Vec<ScenarioDay>,
    /// Cluster index of every bus, in bus order.
    pub cluster_of: Vec<usize>,
}

fn offset(center: GeoCoord, north_km: f64, east_km: f64) -> GeoCoord {
    let lat = center.latitude + north_km / KM_PER_DEGREE;
    let lon = center.longitude + east_km / (KM_PER_DEGREE * center.latitude.to_radians().cos());
    GeoCoord::new(lat, lon)
}

struct Builder<'a> {
    rng: ChaCha8Rng,
    knobs: &'a SynthKnobs,
    net: Network,
    cluster_of: Vec<usize>,
}

impl Builder<'_> {
    fn line(&mut self, from: usize, to: usize, rating: f64) {
        let a = &self.net.buses[from];
        let b = &self.net.buses[to];
        let km = crate::grid::haversine_distance(a.location, b.location).max(0.1);
        // Terminal equipment puts a floor under short-line impedance.
        let r = (0.004 + 0.0004 * km) * self.rng.gen_range(0.8..1.2);
        let id = format!("l{}", self.net.branches.len());
        self.net.branches.push(Branch {
            id,
            from_bus: a.id.clone(),
            to_bus: b.id.clone(),
            kind: BranchKind::Line,
            r,
            x: 8.0 * r,
            rating,
            reinforce_cost: (2000.0 + 300.0 * km).round(),
            reinforcible: false,
        });
    }
}

fn availability_key(tech: &str, cluster: usize) -> String {
    format!("{tech}@c{cluster}")
}

/// A reproducible geo-clustered test system and `n_days` equiprobable days.
///
/// Buses of one cluster sit within `cluster_radius_km` of its centre and are
/// joined by a spanning tree of short lines (radial spurs) plus a chord when
/// the cluster has three or more buses (meshed core). Clusters are chained
/// by long lines, closed into a ring when there are three or more.
/// Transformer nodes hang off a cluster's substation bus. Wind and solar
/// availability is shared by everything in a cluster.
pub fn synth_instance(seed: u64, n_buses: usize, n_days: usize, knobs: &SynthKnobs) -> Result<SynthInstance> {
    if n_buses < 2 {
        return Err(Error::Config("a synthetic instance needs at least 2 buses".into()));
    }
    if n_days == 0 {
        return Err(Error::Config("a synthetic instance needs at least one day".into()));
    }
    let tnodes = knobs.transformer_nodes.unwrap_or(n_buses / 10);
    let clusters = knobs.clusters.unwrap_or(((n_buses - tnodes) as f64 / 4.0).round().max(1.0) as usize);
    if clusters == 0 || clusters + tnodes > n_buses {
        return Err(Error::Config(format!(
            "{clusters} clusters and {tnodes} transformer nodes do not fit in {n_buses} buses"
        )));
    }
    if !(knobs.cluster_radius_km > 0.0) || knobs.cluster_spacing_km < 5.0 * knobs.cluster_radius_km {
        return Err(Error::Config("cluster spacing must be at least five cluster radii".into()));
    }
    if !(0.0..=2.0).contains(&knobs.existing_fraction) || knobs.candidates < 4 || knobs.integer_candidates > knobs.candidates {
        return Err(Error::Config("degenerate capacity or candidate knobs".into()));
    }

    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        knobs,
        net: Network::default(),
        cluster_of: Vec::new(),
    };
    let side = (clusters as f64).sqrt().ceil() as usize;
    let spacing = knobs.cluster_spacing_km;
    let centers: Vec<GeoCoord> = (0..clusters)
        .map(|c| {
            let jitter = 0.1 * spacing;
            let north = (c / side) as f64 * spacing + b.rng.gen_range(-jitter..jitter);
            let east = (c % side) as f64 * spacing + b.rng.gen_range(-jitter..jitter);
            offset(GeoCoord::new(ORIGIN.0, ORIGIN.1), north, east)
        })
        .collect();

    // Cluster buses, round-robin so every cluster gets at least one.
    let core = n_buses - tnodes;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters];
    for i in 0..core {
        let c = i % clusters;
        let loc = if members[c].is_empty() {
            centers[c]
        } else {
            let rad = knobs.cluster_radius_km * b.rng.gen::<f64>().sqrt();
            let ang = b.rng.gen_range(0.0..2.0 * PI);
            offset(centers[c], rad * ang.cos(), rad * ang.sin())
        };
        members[c].push(b.net.buses.len());
        b.net.buses.push(Bus {
            id: format!("b{}", b.net.buses.len()),
            location: loc,
            is_substation: false,
            base_kv: 230.0,
        });
        b.cluster_of.push(c);
    }
    for m in &members {
        b.net.buses[m[0]].is_substation = true;
    }

    // Intra-cluster tree plus one chord.
    for m in &members {
        for k in 1..m.len() {
            let parent = m[b.rng.gen_range(0..k)];
            let rating = b.rng.gen_range(80.0f64..160.0).round();
            b.line(m[k], parent, rating);
        }
        if m.len() >= 3 {
            let (i, j) = (b.rng.gen_range(1..m.len()), b.rng.gen_range(0..m.len()));
            if i != j {
                let rating = b.rng.gen_range(80.0f64..160.0).round();
                b.line(m[i], m[j], rating);
            }
        }
    }
    // Inter-cluster chain, closed into a ring.
    let mut inter = Vec::new();
    let links: Vec<(usize, usize)> = match clusters {
        1 => Vec::new(),
        2 => vec![(0, 1)],
        k => (0..k).map(|c| (c, (c + 1) % k)).collect(),
    };
    for (c1, c2) in links {
        let from = *members[c1].choose(&mut b.rng).unwrap();
        let to = *members[c2].choose(&mut b.rng).unwrap();
        let rating = b.rng.gen_range(30.0f64..80.0).round();
        inter.push(b.net.branches.len());
        b.line(from, to, rating);
    }

    // Transformer nodes.
    for t in 0..tnodes {
        let c = t % clusters;
        let sub = members[c][0];
        let loc = offset(b.net.buses[sub].location, 0.05, 0.05);
        let id = format!("b{}", b.net.buses.len());
        b.net.buses.push(Bus {
            id: id.clone(),
            location: loc,
            is_substation: false,
            base_kv: 115.0,
        });
        b.cluster_of.push(c);
        b.net.branches.push(Branch {
            id: format!("t{t}"),
            from_bus: b.net.buses[sub].id.clone(),
            to_bus: id,
            kind: BranchKind::Transformer,
            r: 0.001,
            x: 0.02,
            rating: 150.0,
            reinforce_cost: 0.0,
            reinforcible: false,
        });
    }

    // Reinforcible lines, inter-cluster first.
    let mut lines: Vec<usize> = (0..b.net.branches.len()).filter(|&i| b.net.branches[i].is_line()).collect();
    lines.shuffle(&mut b.rng);
    lines.sort_by_key(|i| !inter.contains(i));
    for &i in lines.iter().take(knobs.reinforcible_lines) {
        b.net.branches[i].reinforcible = true;
    }

    // Loads on every bus.
    for i in 0..b.net.buses.len() {
        let profile = if b.rng.gen_bool(0.5) { "res" } else { "com" };
        b.net.loads.push(Load {
            id: format!("d{i}"),
            bus: b.net.buses[i].id.clone(),
            profile_key: profile.into(),
            peak: b.rng.gen_range(5.0f64..25.0).round(),
        });
    }
    let peak = b.net.total_peak_load();

    // Existing generation covering `existing_fraction` of peak.
    let target = knobs.existing_fraction * peak;
    let mut techs: Vec<(&str, bool, f64)> = vec![("gas_cc", false, 35.0), ("wind", true, 0.0), ("gas_ct", false, 70.0)];
    if knobs.hydro {
        techs.insert(1, ("hydro", true, 5.0));
    }
    let per_unit = target / (clusters.max(2) as f64);
    let mut placed = 0.0;
    let mut k = 0;
    while placed < target - 1e-9 {
        let (tech, renewable, cost) = techs[k % techs.len()];
        let c = k % clusters;
        let bus = *members[c].choose(&mut b.rng).unwrap();
        let cap = per_unit.min(target - placed).max(1.0).round();
        b.net.generators.push(Generator {
            id: format!("g{k}"),
            bus: b.net.buses[bus].id.clone(),
            tech: tech.into(),
            capacity: cap,
            variable_cost: cost * b.rng.gen_range(0.9..1.1),
            is_renewable: renewable,
            availability_key: (tech == "wind").then(|| availability_key("wind", c)),
            is_hydro_budgeted: tech == "hydro",
        });
        placed += cap;
        k += 1;
    }
    for s in 0..knobs.storage_units {
        let bus = b.rng.gen_range(0..core);
        let power = b.rng.gen_range(5.0f64..15.0).round();
        b.net.storage.push(Storage {
            id: format!("s{s}"),
            bus: b.net.buses[bus].id.clone(),
            power_capacity: power,
            energy_capacity: 4.0 * power,
            round_trip_efficiency: 0.85,
        });
    }

    // Candidates, cycling through four technologies.
    let cand_techs = [
        ("solar", CandidateKind::Generation, true, 0.0, 55_000.0),
        ("gas_ct", CandidateKind::Generation, false, 75.0, 45_000.0),
        ("wind", CandidateKind::Generation, true, 0.0, 70_000.0),
        ("battery", CandidateKind::Storage, false, 0.0, 40_000.0),
    ];
    let int_slots: Vec<usize> = {
        // Integer candidates are the thermal ones first, then any.
        let mut order: Vec<usize> = (0..knobs.candidates).collect();
        order.sort_by_key(|&i| cand_techs[i % 4].0 != "gas_ct");
        order.into_iter().take(knobs.integer_candidates).collect()
    };
    for i in 0..knobs.candidates {
        let (tech, kind, renewable, cost, capex) = cand_techs[i % 4];
        let bus = b.rng.gen_range(0..core);
        let c = b.cluster_of[bus];
        let integer = int_slots.contains(&i);
        let (unit_size, max_build, integrality) = if integer {
            let unit = b.rng.gen_range(5.0f64..15.0).round();
            (unit, unit * knobs.max_units as f64, Integrality::Integer)
        } else {
            (1.0, b.rng.gen_range(20.0f64..80.0).round(), Integrality::Continuous)
        };
        b.net.candidates.push(Candidate {
            id: format!("c{i}_{tech}"),
            bus: b.net.buses[bus].id.clone(),
            kind,
            tech: tech.into(),
            unit_size,
            integrality,
            max_build,
            capex,
            variable_cost: cost,
            is_renewable: renewable,
            availability_key: matches!(tech, "solar" | "wind").then(|| availability_key(tech, c)),
            duration_hours: 4.0,
            round_trip_efficiency: 0.85,
        });
    }

    let days = (0..n_days).map(|d| synth_day(&mut b, d, n_days, clusters)).collect();
    let cluster_of = b.cluster_of;
    Ok(SynthInstance {
        network: b.net,
        days,
        cluster_of,
    })
}

fn synth_day(b: &mut Builder<'_>, d: usize, n_days: usize, clusters: usize) -> ScenarioDay {
    let mut day = ScenarioDay::new(format!("d{d}"), 1.0 / n_days as f64);
    let noise = b.knobs.load_noise;
    for c in 0..clusters {
        let clear = b.rng.gen_range(0.5..1.0);
        let solar: [f64; HOURS] = std::array::from_fn(|h| (clear * ((h as f64 - 6.0) * PI / 12.0).sin()).clamp(0.0, 1.0));
        day.availability.insert(availability_key("solar", c), solar);
        let mut w: f64 = b.rng.gen_range(0.1..0.8);
        let wind: [f64; HOURS] = std::array::from_fn(|_| {
            w = (w + b.rng.gen_range(-0.1..0.1)).clamp(0.0, 1.0);
            w
        });
        day.availability.insert(availability_key("wind", c), wind);
    }
    for (key, peak_hour) in [("res", 19.0), ("com", 14.0)] {
        let level = b.rng.gen_range(0.85..1.0);
        let profile: [f64; HOURS] = std::array::from_fn(|h| {
            let shape = 0.65 + 0.35 * (-(h as f64 - peak_hour).powi(2) / 18.0).exp();
            let jitter = 1.0 + b.rng.gen_range(-noise..=noise);
            (level * shape * jitter).clamp(0.0, 1.0)
        });
        day.load.insert(key.into(), profile);
    }
    for g in &b.net.generators {
        if g.is_hydro_budgeted {
            day.hydro.insert(g.id.clone(), (g.capacity * 24.0 * b.rng.gen_range(0.3..0.6)).round());
        }
    }
    day
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::validate_network;

    #[test]
    fn deterministic_by_seed() {
        let k = SynthKnobs::default();
        assert_eq!(synth_instance(3, 12, 2, &k).unwrap(), synth_instance(3, 12, 2, &k).unwrap());
        assert_ne!(synth_instance(3, 12, 2, &k).unwrap(), synth_instance(4, 12, 2, &k).unwrap());
    }

    #[test]
    fn minimal_instance_validates() {
        let inst = synth_instance(0, 2, 1, &SynthKnobs::default()).unwrap();
        assert_eq!(inst.network.buses.len(), 2);
        let report = validate_network(&inst.network);
        assert!(!report.has_errors(), "{report}");
        let techs: std::collections::BTreeSet<_> = inst.network.candidates.iter().map(|c| &c.tech).collect();
        assert!(techs.len() >= 4);
    }

    #[test]
    fn degenerate_knobs_rejected() {
        assert!(synth_instance(0, 1, 1, &SynthKnobs::default()).is_err());
        let k = SynthKnobs {
            clusters: Some(5),
            transformer_nodes: Some(0),
            ..Default::default()
        };
        assert!(synth_instance(0, 4, 1, &k).is_err());
    }
}
