mod common;

use common::{fixture, merged_groups, no_short_lines, reduction_invariants, short_line_groups};
use gridfold::grid::{validate_network, Network};
use gridfold::reduction::{
    reduce_network, reduction_stats, tighten_candidates, LineComposition, MergeMap, ReductionConfig, ReductionMode,
};
use gridfold::scenarios::{synth_instance, SynthKnobs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn net(seed: u64, buses: usize) -> Network {
    synth_instance(seed, buses, 1, &SynthKnobs::default()).unwrap().network
}

#[test]
fn fig1_radial_pass_removes_only_b() {
    let orig = fixture("fig1.toml");
    let (red, mm) = reduce_network(&orig, &ReductionConfig::new(20.0, ReductionMode::Radial)).unwrap();
    assert_eq!(red.buses.len(), 3);
    assert_eq!(mm.removed_lines.iter().collect::<Vec<_>>(), ["B"]);
    assert_eq!(mm.bus_map["4"], "2");
    let mut ids: Vec<&str> = red.lines().map(|l| l.id.as_str()).collect();
    ids.sort();
    assert_eq!(ids, ["A", "C"]);
    reduction_invariants(&orig, &red, &mm).unwrap();
}

#[test]
fn fig1_full_reduction() {
    let orig = fixture("fig1.toml");
    let (red, mm) = reduce_network(&orig, &ReductionConfig::new(20.0, ReductionMode::Full)).unwrap();
    let a = orig.branch("A").unwrap();
    let c = orig.branch("C").unwrap();

    let lines: Vec<_> = red.lines().collect();
    assert_eq!(lines.len(), 1);
    let ac = lines[0];
    assert_eq!(ac.id, "A-C");
    assert_eq!((ac.r, ac.x), (a.r + c.r, a.x + c.x));
    // C is the outer line re-attached through the collapsed pair line A.
    assert_eq!(ac.rating, c.rating);
    assert_eq!(
        mm.line_composition["A-C"],
        LineComposition::Series(vec![LineComposition::Line("A".into()), LineComposition::Line("C".into())])
    );
    assert_eq!(mm.line_composition["A-C"].flatten(), ["A", "C"]);
    assert_eq!(mm.bus_map["2"], "1");
    assert_eq!(mm.bus_map["4"], "1");

    let stats = reduction_stats(&orig, &red);
    assert_eq!((stats.original.buses, stats.reduced.buses), (4, 2));
    assert_eq!((stats.original.lines, stats.reduced.lines), (3, 1));
    assert_eq!(stats.reduced.transformers, 1);
    reduction_invariants(&orig, &red, &mm).unwrap();
    no_short_lines(&red, 20.0).unwrap();
}

#[test]
fn zero_distance_is_identity_on_synthetic_networks() {
    for seed in 0..10 {
        let orig = net(seed, 25);
        let (red, mm) = reduce_network(&orig, &ReductionConfig::new(0.0, ReductionMode::Full)).unwrap();
        assert_eq!(red, orig, "seed {seed}");
        assert!(mm.is_identity());
        assert_eq!(mm, MergeMap::identity(&orig, ReductionConfig::new(0.0, ReductionMode::Full)));
    }
}

#[test]
fn infinite_distance_matches_union_find() {
    for seed in 0..5 {
        let orig = net(seed, 30);
        let (red, mm) = reduce_network(&orig, &ReductionConfig::new(f64::INFINITY, ReductionMode::Full)).unwrap();
        assert_eq!(merged_groups(&mm), short_line_groups(&orig, f64::INFINITY), "seed {seed}");
        assert_eq!(red.lines().count(), 0);
        reduction_invariants(&orig, &red, &mm).unwrap();
    }
}

#[test]
fn clusters_collapse_below_their_spacing() {
    let knobs = SynthKnobs::default();
    let inst = synth_instance(7, 30, 1, &knobs).unwrap();
    let orig = &inst.network;
    let d = 5.0;
    assert!(2.0 * knobs.cluster_radius_km < d && d < knobs.cluster_spacing_km / 2.0);
    let (red, mm) = reduce_network(orig, &ReductionConfig::new(d, ReductionMode::Full)).unwrap();

    let tnodes = orig.transformers().count();
    let clusters = inst.cluster_of.iter().max().unwrap() + 1;
    assert_eq!(red.buses.len(), clusters + tnodes);
    assert_eq!(merged_groups(&mm), short_line_groups(orig, d));
    reduction_invariants(orig, &red, &mm).unwrap();
    no_short_lines(&red, d).unwrap();
}

#[test]
fn random_reductions_keep_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..40 {
        let buses = rng.gen_range(2..40);
        let orig = net(rng.gen(), buses);
        let d = [0.0, 1.0, 3.0, 10.0, 50.0, f64::INFINITY][rng.gen_range(0..6)];
        for mode in [ReductionMode::Radial, ReductionMode::Full] {
            let cfg = ReductionConfig::new(d, mode);
            let (red, mm) = reduce_network(&orig, &cfg).unwrap();
            reduction_invariants(&orig, &red, &mm).unwrap_or_else(|e| panic!("case {case} {cfg:?}: {e}"));
            assert!(!validate_network(&red).has_errors(), "case {case}");
            if mode == ReductionMode::Full {
                no_short_lines(&red, d).unwrap();
            }
            let tight = tighten_candidates(&red, &orig, &mm).unwrap();
            for (a, b) in tight.candidates.iter().zip(&red.candidates) {
                assert!(a.max_build <= b.max_build);
            }
        }
    }
}

#[test]
fn bus_count_is_monotone_in_distance() {
    for seed in 0..5 {
        let orig = net(seed, 40);
        for mode in [ReductionMode::Radial, ReductionMode::Full] {
            let counts: Vec<usize> = [0.0, 2.0, 5.0, 50.0, f64::INFINITY]
                .iter()
                .map(|&d| reduce_network(&orig, &ReductionConfig::new(d, mode)).unwrap().0.buses.len())
                .collect();
            assert!(counts.windows(2).all(|w| w[0] >= w[1]), "seed {seed} {mode:?}: {counts:?}");
        }
    }
}

#[test]
fn merge_map_round_trips() {
    let orig = fixture("fig1.toml");
    let (_, mm) = reduce_network(&orig, &ReductionConfig::new(f64::INFINITY, ReductionMode::Full)).unwrap();
    let text = mm.to_json().unwrap();
    assert!(text.contains("\"inf\""));
    assert_eq!(MergeMap::from_json(&text).unwrap(), mm);
}
