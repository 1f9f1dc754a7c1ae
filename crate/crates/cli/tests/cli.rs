use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gridfold::cep::CepConfig;
use gridfold::grid::load_network;
use gridfold::reduction::{ReductionConfig, ReductionMode};
use gridfold::scenarios::load_scenarios;
use gridfold::solver::OracleSolver;
use gridfold::two_step::{run_two_step_reducing, GenStorageMap, MappingStrategy, TransmissionMap};
use serde_json::Value;

fn gridfold(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_gridfold"))
        .args(args)
        .env_remove("GRIDFOLD_SOLVER_CMD")
        .output()
        .unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fig1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/fig1.toml")
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// A synthetic instance written by `synth`.
fn synth(dir: &Path, seed: u64, buses: usize, days: usize) -> (PathBuf, PathBuf) {
    let out = dir.join(format!("inst{seed}"));
    let seed = seed.to_string();
    let (b, d) = (buses.to_string(), days.to_string());
    let o = gridfold(&["--seed", &seed, "synth", "--buses", &b, "--days", &d, "--out", s(&out)]);
    assert!(o.status.success());
    (out.join("network.toml"), out.join("scenarios"))
}

fn reduce(dir: &Path, net: &Path, d: &str, mode: &str) -> Value {
    let stats = dir.join("stats.json");
    let o = gridfold(&[
        "reduce",
        "--network",
        s(net),
        "--distance-km",
        d,
        "--mode",
        mode,
        "--out",
        s(&dir.join("red.toml")),
        "--merge-map",
        s(&dir.join("mm.json")),
        "--stats",
        s(&stats),
    ]);
    assert!(o.status.success());
    read(&stats)
}

#[test]
fn zero_distance_keeps_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (net, _) = synth(dir.path(), 1, 15, 1);
    let st = reduce(dir.path(), &net, "0", "full");
    assert_eq!(st["original"], st["reduced"]);
}

#[test]
fn fig1_reduces_to_two_buses() {
    let dir = tempfile::tempdir().unwrap();
    let st = reduce(dir.path(), &fig1(), "20", "full");
    assert_eq!(st["reduced"]["buses"], 2);
    assert_eq!(st["reduced"]["lines"], 1);
    let red = load_network(dir.path().join("red.toml")).unwrap();
    assert_eq!(red.lines().next().unwrap().id, "A-C");
    let mm = read(&dir.path().join("mm.json"));
    assert_eq!(mm["bus_map"]["2"], "1");
}

#[test]
fn radial_mode_leaves_a_meshed_network_alone() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("format = 1\n");
    for (id, lat) in [("1", 35.0), ("2", 35.001), ("3", 35.002)] {
        text += &format!(
            "[[buses]]\nid = \"{id}\"\nlocation = {{ latitude = {lat}, longitude = -100.0 }}\nbase_kv = 115.0\n"
        );
    }
    for (id, a, b) in [("l1", "1", "2"), ("l2", "2", "3"), ("l3", "3", "1")] {
        text += &format!(
            "[[branches]]\nid = \"{id}\"\nfrom_bus = \"{a}\"\nto_bus = \"{b}\"\nkind = \"line\"\nr = 0.01\nx = 0.1\nrating = 50.0\nreinforce_cost = 0.0\n"
        );
    }
    let net = dir.path().join("tri.toml");
    std::fs::write(&net, text).unwrap();
    let st = reduce(dir.path(), &net, "100", "radial");
    assert_eq!(st["original"], st["reduced"]);
    let st = reduce(dir.path(), &net, "100", "full");
    assert_eq!(st["reduced"]["buses"], 1);
}

fn two_step(net: &Path, sc: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--oracle",
        "--jobs",
        "2",
        "two-step",
        "--network",
        s(net),
        "--scenarios",
        s(sc),
        "--report",
        s(out),
    ];
    args.extend_from_slice(extra);
    gridfold(&args)
}

#[test]
fn identity_batch_matches_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (net, sc) = synth(dir.path(), 2, 6, 5);
    let out = dir.path().join("rep");
    let o = two_step(&net, &sc, &out, &["--distance-km", "0", "--map", "B"]);
    assert!(o.status.success());
    let rep = read(&out.join("report.json"));
    let cases = rep["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 5);
    assert_eq!(rep["ermm"]["cases"].as_array().unwrap().len(), 5);
    assert!(rep["failures"].as_array().unwrap().is_empty());

    let network = load_network(&net).unwrap();
    let days = load_scenarios(&sc).unwrap();
    let strategy = MappingStrategy {
        gen_storage: GenStorageMap::B,
        transmission: TransmissionMap::MapComponents,
    };
    for (case, day) in cases.iter().zip(&days) {
        assert_eq!(case["id"], day.id.as_str());
        assert!(case["ermm"].as_f64().unwrap().abs() <= 1e-6);
        let lib = run_two_step_reducing(
            &network,
            &ReductionConfig::new(0.0, ReductionMode::Full),
            std::slice::from_ref(day),
            &CepConfig::default(),
            strategy,
            &OracleSolver::default(),
        )
        .unwrap();
        assert_eq!(case["f_xprime"].as_f64().unwrap(), lib.f_xprime);
    }
    let csv = gridfold(&["report", s(&out), "--csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 6);
}

#[test]
fn transmission_variants_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (net, sc) = synth(dir.path(), 4, 8, 2);
    let run = |name: &str, t: &str| {
        let out = dir.path().join(name);
        let o = two_step(&net, &sc, &out, &["--distance-km", "5", "--map", "A", "--transmission", t, "--stochastic"]);
        assert!(o.status.success());
        read(&out.join("report.json"))
    };
    let comp = run("comp", "components");
    let all = run("all", "all");
    let again = run("comp2", "components");
    for r in [&comp, &all] {
        let c = &r["cases"][0];
        assert_eq!(c["id"], "all");
        assert!(c["f_xprime"].as_f64().unwrap() >= c["f_xstar"].as_f64().unwrap() * (1.0 - 1e-9));
    }
    assert!(all["cases"][0]["mapped"]["line_reinforced"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v == true));
    // The oracle backend is deterministic.
    assert_eq!(comp["cases"][0]["f_xprime"], again["cases"][0]["f_xprime"]);
    assert_eq!(comp["cases"][0]["mapped"], again["cases"][0]["mapped"]);
}

#[test]
fn a_failing_case_does_not_stop_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    let (net, sc) = synth(dir.path(), 5, 6, 3);
    let base = dir.path().join("base");
    assert!(gridfold(&["--oracle", "baseline", "--network", s(&net), "--scenarios", s(&sc), "--out", s(&base)])
        .status
        .success());
    // A zero baseline cost leaves ERMM undefined for that day.
    let path = base.join("baseline.json");
    let mut records = read(&path);
    records[1]["objective"] = 0.0.into();
    std::fs::write(&path, records.to_string()).unwrap();

    let out = dir.path().join("rep");
    let o = two_step(&net, &sc, &out, &["--distance-km", "5", "--baseline", s(&path)]);
    assert_eq!(o.status.code(), Some(3));
    let rep = read(&out.join("report.json"));
    assert_eq!(rep["cases"].as_array().unwrap().len(), 2);
    assert_eq!(rep["failures"][0]["id"], "d1");
    assert!(out.join("cases/d0.json").exists() && out.join("cases/d2.json").exists());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (net, sc) = synth(dir.path(), 6, 6, 1);
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "network = \"{}\"\nscenarios = \"{}\"\noracle = true\n[reduction]\ndistance_km = \"inf\"\nmode = \"full\"\n[cep]\nrps_target = 0.3\n[mapping]\ngen_storage = \"C\"\ntransmission = \"map-components\"\n",
            s(&net),
            s(&sc)
        ),
    )
    .unwrap();
    let out = dir.path().join("rep");
    let o = gridfold(&["--config", s(&cfg), "two-step", "--distance-km", "0", "--report", s(&out)]);
    assert!(o.status.success());
    let rep = read(&out.join("report.json"));
    assert_eq!(rep["reduction"]["distance_km"], 0.0);
    assert_eq!(rep["strategy"]["gen_storage"], "C");
}

#[test]
fn missing_inputs_fail_cleanly() {
    let o = gridfold(&["reduce", "--network", "/nonexistent.toml", "--distance-km", "1", "--out", "x", "--merge-map", "y"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
    let o = gridfold(&["two-step", "--distance-km", "1", "--report", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--network is required"));
}
