use gridfold::cep::{
    build_deterministic_cep, build_stochastic_cep, evaluate_portfolio, operational_details, CepConfig, Portfolio,
};
use gridfold::grid::network_from_str;
use gridfold::scenarios::{ScenarioDay, HOURS};
use gridfold::solver::simplex::{solve_lp, LpProblem, LpStatus};
use gridfold::solver::{solve_bruteforce, MilpSolver, OracleLimits, OracleSolver, SolveStatus};

fn cfg() -> CepConfig {
    CepConfig {
        rps_target: 0.0,
        losses_enabled: false,
        days_per_year: 1.0,
        ..Default::default()
    }
}

fn day(id: &str, p: f64, load: f64, avail: &[(&str, f64)]) -> ScenarioDay {
    let mut d = ScenarioDay::new(id, p);
    d.load.insert("flat".into(), [load; HOURS]);
    for (k, v) in avail {
        d.availability.insert(k.to_string(), [*v; HOURS]);
    }
    d
}

const ONE_BUS: &str = r#"
format = 1
[[buses]]
id = "1"
location = { latitude = 35.0, longitude = -100.0 }
base_kv = 230.0
[[generators]]
id = "g"
bus = "1"
tech = "gas"
capacity = 20.0
variable_cost = 10.0
availability_key = "g"
[[loads]]
id = "d"
bus = "1"
profile_key = "flat"
peak = 1.0
"#;

#[test]
fn single_bus_dispatch_cost() {
    let net = network_from_str(ONE_BUS, "one-bus").unwrap();
    let m = build_deterministic_cep(&net, &day("d", 1.0, 10.0, &[("g", 1.0)]), &cfg()).unwrap();
    let sol = OracleSolver::default().solve(&m, 0.0, 60.0).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective.unwrap() - 24.0 * 10.0 * 10.0).abs() < 1e-6);
}

#[test]
fn unavailable_generator_sheds_everything() {
    let net = network_from_str(ONE_BUS, "one-bus").unwrap();
    let c = cfg();
    let d = day("d", 1.0, 10.0, &[("g", 0.0)]);
    let m = build_deterministic_cep(&net, &d, &c).unwrap();
    let sol = OracleSolver::default().solve(&m, 0.0, 60.0).unwrap();
    assert!((sol.objective.unwrap() - 24.0 * 10.0 * c.shed_penalty).abs() < 1e-6);
    let detail = operational_details(&net, &[d.with_probability(1.0)], &c, &m, &sol).unwrap();
    assert!(detail[0].shed.iter().all(|s| (s - 10.0).abs() < 1e-9));
}

const TWO_BUS: &str = r#"
format = 1
[[buses]]
id = "1"
location = { latitude = 35.0, longitude = -100.0 }
base_kv = 230.0
[[buses]]
id = "2"
location = { latitude = 35.1, longitude = -100.0 }
base_kv = 230.0
[[branches]]
id = "L"
from_bus = "2"
to_bus = "1"
kind = "line"
r = 0.01
x = 0.1
rating = 5.0
reinforce_cost = 50000.0
reinforcible = true
[[generators]]
id = "g"
bus = "2"
tech = "gas"
capacity = 10.0
variable_cost = 5.0
[[loads]]
id = "d"
bus = "1"
profile_key = "flat"
peak = 1.0
"#;

#[test]
fn reinforcement_beats_shedding() {
    let net = network_from_str(TWO_BUS, "two-bus").unwrap();
    let c = cfg();
    let m = build_deterministic_cep(&net, &day("d", 1.0, 10.0, &[]), &c).unwrap();

    // Independent check: fix the binary each way and solve the two LPs.
    let y = m.find_var("reinforce.L").unwrap();
    let by_branch: Vec<f64> = [0.0, 1.0]
        .iter()
        .map(|&v| {
            let mut fixed = m.clone();
            fixed.fix(y, v);
            let (status, obj, _) = solve_lp(&LpProblem::from(&fixed));
            assert_eq!(status, LpStatus::Optimal);
            obj
        })
        .collect();
    // Hand values: 5 MW shed for 24 h versus the reinforcement cost.
    assert!((by_branch[0] - (24.0 * 5.0 * 5.0 + 24.0 * 5.0 * c.shed_penalty)).abs() < 1e-6);
    assert!((by_branch[1] - (50_000.0 + 24.0 * 10.0 * 5.0)).abs() < 1e-6);

    let sol = solve_bruteforce(&m, &OracleLimits::default()).unwrap();
    assert_eq!(sol.values[y], 1.0);
    assert!((sol.objective.unwrap() - by_branch[1]).abs() < 1e-6);
    let p = Portfolio::from_solution(&net, &m, &sol, "two-bus").unwrap();
    assert!(p.reinforced("L"));
    let shed: f64 = m
        .variables
        .iter()
        .zip(&sol.values)
        .filter(|(v, _)| v.name.starts_with("shed."))
        .map(|(_, x)| x)
        .sum();
    assert!(shed.abs() < 1e-9);
}

const SOLAR_BUS: &str = r#"
format = 1
[[buses]]
id = "1"
location = { latitude = 35.0, longitude = -100.0 }
base_kv = 230.0
[[loads]]
id = "d"
bus = "1"
profile_key = "flat"
peak = 1.0
[[candidates]]
id = "pv"
bus = "1"
kind = "generation"
tech = "solar"
unit_size = 1.0
integrality = "integer"
max_build = 20.0
capex = 1000.0
is_renewable = true
availability_key = "sun"
"#;

#[test]
fn shared_build_covers_tight_scenario() {
    let net = network_from_str(SOLAR_BUS, "solar").unwrap();
    let c = cfg();
    let days = [day("a", 0.5, 5.0, &[("sun", 1.0)]), day("b", 0.5, 8.0, &[("sun", 1.0)])];
    let m = build_stochastic_cep(&net, &days, &c).unwrap();
    let sol = solve_bruteforce(&m, &OracleLimits::default()).unwrap();

    // Enumerate the unit count by hand.
    let cost = |n: f64| {
        1000.0 * n
            + days
                .iter()
                .map(|d| d.probability * 24.0 * c.shed_penalty * (d.load["flat"][0] - n).max(0.0))
                .sum::<f64>()
    };
    let best = (0..=20).map(|n| n as f64).min_by(|a, b| cost(*a).total_cmp(&cost(*b))).unwrap();
    assert_eq!(best, 8.0);
    let p = Portfolio::from_solution(&net, &m, &sol, "solar").unwrap();
    assert_eq!(p.build_mw("pv"), best);
    assert!((sol.objective.unwrap() - cost(best)).abs() < 1e-6);
}

#[test]
fn stochastic_single_day_is_deterministic() {
    let net = network_from_str(TWO_BUS, "two-bus").unwrap();
    let d = day("d", 0.3, 10.0, &[]);
    let det = build_deterministic_cep(&net, &d, &cfg()).unwrap();
    let sto = build_stochastic_cep(&net, &[d.with_probability(1.0)], &cfg()).unwrap();
    assert_eq!(det, sto);
    assert!(build_stochastic_cep(&net, &[d.clone()], &cfg()).is_err());
    assert!(build_stochastic_cep(&net, &[], &cfg()).is_err());
}

#[test]
fn missing_scenario_key_is_an_error() {
    let net = network_from_str(ONE_BUS, "one-bus").unwrap();
    let e = build_deterministic_cep(&net, &day("d", 1.0, 10.0, &[]), &cfg()).unwrap_err();
    assert!(e.to_string().contains("`g`"), "{e}");
}

#[test]
fn evaluation_reproduces_solve() {
    let net = network_from_str(SOLAR_BUS, "solar").unwrap();
    let c = cfg();
    let days = [day("a", 0.25, 5.0, &[("sun", 1.0)]), day("b", 0.75, 8.0, &[("sun", 0.5)])];
    let m = build_stochastic_cep(&net, &days, &c).unwrap();
    let sol = solve_bruteforce(&m, &OracleLimits::default()).unwrap();
    let x = Portfolio::from_solution(&net, &m, &sol, "solar").unwrap();
    let eval = evaluate_portfolio(&net, &x, &days, &c, &OracleSolver::default()).unwrap();
    assert!((eval.expected_cost - sol.objective.unwrap()).abs() < 1e-6 * sol.objective.unwrap().abs().max(1.0));
    assert_eq!(eval.scenarios.iter().map(|s| s.scenario.as_str()).collect::<Vec<_>>(), ["a", "b"]);

    let mut over = x.clone();
    over.gen_build.insert("pv".into(), 25.0);
    assert!(evaluate_portfolio(&net, &over, &days, &c, &OracleSolver::default()).is_err());
    let mut frac = x;
    frac.gen_build.insert("pv".into(), 2.5);
    assert!(evaluate_portfolio(&net, &frac, &days, &c, &OracleSolver::default()).is_err());
}

#[test]
fn zero_portfolio_is_pure_dispatch() {
    let net = network_from_str(ONE_BUS, "one-bus").unwrap();
    let days = [day("d", 1.0, 10.0, &[("g", 1.0)])];
    let x = Portfolio::zeros(&net, "one-bus");
    let eval = evaluate_portfolio(&net, &x, &days, &cfg(), &OracleSolver::default()).unwrap();
    assert_eq!(eval.capex, 0.0);
    assert!((eval.expected_cost - 2400.0).abs() < 1e-6);
}

/// Energy balance over the whole network, per hour, from a synthetic solve.
#[test]
fn conservation_with_and_without_losses() {
    use gridfold::scenarios::{synth_instance, SynthKnobs};
    let knobs = SynthKnobs {
        integer_candidates: 0,
        reinforcible_lines: 0,
        ..Default::default()
    };
    let inst = synth_instance(11, 6, 1, &knobs).unwrap();
    let net = &inst.network;
    for losses in [false, true] {
        let c = CepConfig {
            losses_enabled: losses,
            ..CepConfig::default()
        };
        let kappa = c.loss_coefficient_for(net);
        let m = build_deterministic_cep(net, &inst.days[0], &c).unwrap();
        let sol = solve_bruteforce(&m, &OracleLimits::default()).unwrap();
        let (viol, _) = m.violation(&sol.values);
        assert!(viol < 1e-6, "violation {viol}");
        for h in 0..HOURS as u32 {
            let mut injected = 0.0;
            let mut lost = 0.0;
            for (v, &x) in m.variables.iter().zip(&sol.values) {
                let Some(s) = v.symbol.as_ref().filter(|s| s.hour == Some(h)) else { continue };
                match s.role.as_str() {
                    "gen" | "cgen" | "discharge" | "shed" => injected += x,
                    "charge" => injected -= x,
                    "flow_fwd" | "flow_bwd" => {
                        let r = net.branch(&s.element).unwrap().r;
                        lost += CepConfig::loss_factor(kappa, r) * x;
                    }
                    _ => {}
                }
            }
            let load: f64 = net
                .loads
                .iter()
                .map(|l| l.peak * inst.days[0].load[&l.profile_key][h as usize])
                .sum();
            assert!((injected - load - lost).abs() < 1e-6, "hour {h}: {injected} vs {load} + {lost}");
            if !losses {
                assert_eq!(lost, 0.0);
            }
        }
    }
}
