use std::collections::BTreeMap;

use gridfold::cep::{CepConfig, Portfolio};
use gridfold::grid::{load_network, Candidate, CandidateKind, Integrality, Network};
use gridfold::metrics::ermm;
use gridfold::reduction::{LineComposition, MergeMap, ReductionConfig, ReductionMode};
use gridfold::scenarios::{ScenarioDay, HOURS};
use gridfold::solver::OracleSolver;
use gridfold::two_step::{
    apportion, map_investments, map_transmission, run_two_step, run_two_step_reducing, GenStorageMap,
    MappingStrategy, Reduced, TransmissionMap,
};

fn fig1() -> Network {
    load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fig1.toml")).unwrap()
}

fn fig1_reduced() -> Reduced {
    Reduced::compute(&fig1(), &ReductionConfig::new(20.0, ReductionMode::Full)).unwrap()
}

fn candidate(id: &str, tech: &str, max_build: f64, unit: Option<f64>) -> Candidate {
    Candidate {
        id: id.into(),
        bus: "x".into(),
        kind: CandidateKind::Generation,
        tech: tech.into(),
        unit_size: unit.unwrap_or(1.0),
        integrality: if unit.is_some() { Integrality::Integer } else { Integrality::Continuous },
        max_build,
        capex: 1.0,
        variable_cost: 0.0,
        is_renewable: false,
        availability_key: None,
        duration_hours: 4.0,
        round_trip_efficiency: 0.85,
    }
}

#[test]
fn proportional_split() {
    let a = candidate("a", "solar", 20.0, None);
    let b = candidate("b", "solar", 40.0, None);
    assert_eq!(apportion(30.0, &[&a, &b]).unwrap(), vec![10.0, 20.0]);
    assert!(apportion(61.0, &[&a, &b]).is_err());
}

#[test]
fn integer_split_uses_whole_units() {
    let sites: Vec<Candidate> = ["a", "b", "c"].iter().map(|id| candidate(id, "gas_ct", 10.0, Some(5.0))).collect();
    let refs: Vec<&Candidate> = sites.iter().collect();
    // 25/3 MW each by proportion; floors give 5 each, remainders tie, the
    // first two sites take the leftover units.
    assert_eq!(apportion(25.0, &refs).unwrap(), vec![10.0, 10.0, 5.0]);
}

#[test]
fn fig1_map_a_and_b() {
    let net = fig1();
    let red = fig1_reduced();
    let mut x = Portfolio::zeros(&red.network, "reduced");
    x.gen_build.insert("pv2".into(), 12.0);
    x.gen_build.insert("pv4".into(), 18.0);

    let a = map_investments(&x, &red.merge_map, GenStorageMap::A, &net).unwrap();
    assert_eq!(a.fixed, BTreeMap::from([("pv2".to_string(), 10.0), ("pv4".to_string(), 20.0)]));
    assert!(a.totals.is_empty());

    let b = map_investments(&x, &red.merge_map, GenStorageMap::B, &net).unwrap();
    assert!(b.fixed.is_empty());
    assert_eq!(b.totals.len(), 1);
    assert_eq!(b.totals[0].candidates, ["pv2", "pv4"]);
    assert_eq!(b.totals[0].total_mw, 30.0);
}

#[test]
fn map_c_sums_groups_per_technology() {
    let net = Network {
        candidates: vec![
            candidate("s1", "solar", 20.0, None),
            candidate("s2", "solar", 20.0, None),
            candidate("s3", "solar", 20.0, None),
            candidate("w1", "wind", 20.0, None),
        ],
        ..Default::default()
    };
    let mut mm = MergeMap::identity(&net, ReductionConfig::new(0.0, ReductionMode::Full));
    for (c, bus) in [("s1", "X"), ("s2", "X"), ("s3", "Y"), ("w1", "Y")] {
        mm.relocation.candidates.insert(c.into(), bus.into());
    }
    let mut x = Portfolio::zeros(&net, "reduced");
    x.gen_build.insert("s1".into(), 30.0);
    x.gen_build.insert("s3".into(), 12.0);
    let c = map_investments(&x, &mm, GenStorageMap::C, &net).unwrap();
    let solar: Vec<_> = c.totals.iter().filter(|t| t.name == "solar").collect();
    assert_eq!(solar.len(), 1);
    assert_eq!(solar[0].total_mw, 42.0);
    assert_eq!(solar[0].candidates.len(), 3);
}

#[test]
fn fig1_map_components() {
    let net = fig1();
    let red = fig1_reduced();
    assert_eq!(
        red.merge_map.line_composition["A-C"],
        LineComposition::Series(vec![LineComposition::Line("A".into()), LineComposition::Line("C".into())])
    );
    let mut x = Portfolio::zeros(&red.network, "reduced");
    x.line_reinforced.insert("A-C".into(), true);
    let lines = map_transmission(&x, &red.merge_map, TransmissionMap::MapComponents, &net).unwrap();
    assert_eq!(lines.fixed, BTreeMap::from([("A".to_string(), true), ("C".to_string(), true)]));
    assert_eq!(lines.free, ["B"]);

    let all = map_transmission(&x, &red.merge_map, TransmissionMap::ReinforceAll, &net).unwrap();
    assert_eq!(all.fixed.len(), 3);
    assert!(all.fixed.values().all(|v| *v));
}

#[test]
fn unreinforced_composition_fixes_zero() {
    let text = r#"
format = 1
[[buses]]
id = "a"
location = { latitude = 35.0, longitude = -100.0 }
base_kv = 230.0
[[buses]]
id = "b"
location = { latitude = 35.1, longitude = -100.0 }
base_kv = 230.0
[[buses]]
id = "c"
location = { latitude = 35.2, longitude = -100.0 }
base_kv = 230.0
[[branches]]
id = "L5"
from_bus = "a"
to_bus = "b"
kind = "line"
r = 0.01
x = 0.1
rating = 10.0
reinforcible = true
[[branches]]
id = "L7"
from_bus = "b"
to_bus = "c"
kind = "line"
r = 0.01
x = 0.1
rating = 10.0
reinforcible = true
"#;
    let net = gridfold::grid::network_from_str(text, "chain").unwrap();
    let mut mm = MergeMap::identity(&net, ReductionConfig::new(0.0, ReductionMode::Full));
    mm.line_composition = BTreeMap::from([(
        "L5-L7".to_string(),
        LineComposition::Series(vec![LineComposition::Line("L5".into()), LineComposition::Line("L7".into())]),
    )]);
    let mut x = Portfolio::zeros(&net, "reduced");
    x.line_reinforced = BTreeMap::from([("L5-L7".to_string(), false)]);
    let lines = map_transmission(&x, &mm, TransmissionMap::MapComponents, &net).unwrap();
    assert_eq!(lines.fixed, BTreeMap::from([("L5".to_string(), false), ("L7".to_string(), false)]));
    assert!(lines.free.is_empty());
}

fn fig1_day() -> ScenarioDay {
    let mut d = ScenarioDay::new("d", 1.0);
    d.load.insert("flat".into(), [1.0; HOURS]);
    let sun: [f64; HOURS] = std::array::from_fn(|h| if (7..19).contains(&h) { 0.8 } else { 0.0 });
    d.availability.insert("sun".into(), sun);
    d
}

fn small_cfg() -> CepConfig {
    CepConfig {
        days_per_year: 1.0,
        rps_target: 0.2,
        ..Default::default()
    }
}

#[test]
fn fig1_mapping_hierarchy() {
    let net = fig1();
    let cfg = small_cfg();
    let days = [fig1_day()];
    let oracle = OracleSolver::default();
    let mut costs = Vec::new();
    for map in [GenStorageMap::A, GenStorageMap::B, GenStorageMap::C] {
        let strategy = MappingStrategy {
            gen_storage: map,
            transmission: TransmissionMap::MapComponents,
        };
        let r = run_two_step(&net, fig1_reduced(), &days, &cfg, strategy, &oracle).unwrap();
        costs.push(r.f_xprime);
    }
    let baseline = gridfold::two_step::solve_cep(&net, &days, &cfg.resolved(&net), &oracle, 0.0, 60.0, "x*")
        .unwrap()
        .objective();
    let tol = 1e-6 * baseline;
    assert!(baseline <= costs[2] + tol, "{baseline} vs {costs:?}");
    assert!(costs[2] <= costs[1] + tol && costs[1] <= costs[0] + tol, "{costs:?}");
}

#[test]
fn identity_reduction_with_map_b_recovers_baseline() {
    let net = fig1();
    let cfg = small_cfg();
    let days = [fig1_day()];
    let oracle = OracleSolver::default();
    let strategy = MappingStrategy {
        gen_storage: GenStorageMap::B,
        transmission: TransmissionMap::MapComponents,
    };
    let r = run_two_step_reducing(&net, &ReductionConfig::new(0.0, ReductionMode::Full), &days, &cfg, strategy, &oracle)
        .unwrap();
    assert!(r.reduced.merge_map.is_identity());
    let baseline = gridfold::two_step::solve_cep(&net, &days, &cfg.resolved(&net), &oracle, 0.0, 60.0, "x*")
        .unwrap()
        .objective();
    assert!(ermm(r.f_xprime, baseline).unwrap().abs() <= 1e-6);
}
