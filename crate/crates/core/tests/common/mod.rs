//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use gridfold::grid::{haversine_distance, load_network, Network};
use gridfold::reduction::MergeMap;

pub fn fixture(name: &str) -> Network {
    load_network(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Minimal union-find over string keys.
pub struct UnionFind {
    parent: HashMap<String, String>,
}

impl UnionFind {
    pub fn new<'a>(keys: impl IntoIterator<Item = &'a String>) -> Self {
        Self {
            parent: keys.into_iter().map(|k| (k.clone(), k.clone())).collect(),
        }
    }

    pub fn find(&mut self, k: &str) -> String {
        let p = self.parent[k].clone();
        if p == k {
            return p;
        }
        let root = self.find(&p);
        self.parent.insert(k.to_string(), root.clone());
        root
    }

    pub fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }

    /// Groups of keys sharing a root, each sorted, in sorted order.
    pub fn groups(&mut self) -> Vec<Vec<String>> {
        let keys: Vec<String> = self.parent.keys().cloned().collect();
        let mut by_root: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for k in keys {
            let r = self.find(&k);
            by_root.entry(r).or_default().push(k);
        }
        let mut out: Vec<Vec<String>> = by_root
            .into_values()
            .map(|mut g| {
                g.sort();
                g
            })
            .collect();
        out.sort();
        out
    }
}

/// Bus groups of a reduction, read from its bus map.
pub fn merged_groups(mm: &MergeMap) -> Vec<Vec<String>> {
    let mut by_target: BTreeMap<&String, Vec<String>> = BTreeMap::new();
    for (orig, red) in &mm.bus_map {
        by_target.entry(red).or_default().push(orig.clone());
    }
    let mut out: Vec<Vec<String>> = by_target
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    out.sort();
    out
}

/// Union-find over lines no longer than `d_km`.
pub fn short_line_groups(net: &Network, d_km: f64) -> Vec<Vec<String>> {
    let mut uf = UnionFind::new(net.buses.iter().map(|b| &b.id));
    for l in net.lines() {
        let a = net.bus(&l.from_bus).unwrap().location;
        let b = net.bus(&l.to_bus).unwrap().location;
        if haversine_distance(a, b) <= d_km {
            uf.union(&l.from_bus, &l.to_bus);
        }
    }
    uf.groups()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Every reduction invariant that can be checked without solving anything.
/// Returns the first violation found.
pub fn reduction_invariants(original: &Network, reduced: &Network, mm: &MergeMap) -> Result<(), String> {
    mm.check(original, reduced).map_err(|e| e.to_string())?;
    let sum = |n: &Network, f: &dyn Fn(&Network) -> f64| f(n);
    let totals: [(&str, &dyn Fn(&Network) -> f64); 4] = [
        ("load", &|n| n.loads.iter().map(|l| l.peak).sum()),
        ("capacity", &|n| n.generators.iter().map(|g| g.capacity).sum()),
        ("storage power", &|n| n.storage.iter().map(|s| s.power_capacity).sum()),
        ("storage energy", &|n| n.storage.iter().map(|s| s.energy_capacity).sum()),
    ];
    for (what, f) in totals {
        let (a, b) = (sum(original, f), sum(reduced, f));
        if !close(a, b, 1e-12) {
            return Err(format!("total {what} changed: {a} -> {b}"));
        }
    }
    let counts = [
        ("generators", original.generators.len(), reduced.generators.len()),
        ("storage", original.storage.len(), reduced.storage.len()),
        ("loads", original.loads.len(), reduced.loads.len()),
        ("candidates", original.candidates.len(), reduced.candidates.len()),
        ("transformers", original.transformers().count(), reduced.transformers().count()),
    ];
    for (what, a, b) in counts {
        if a != b {
            return Err(format!("{what} count changed: {a} -> {b}"));
        }
    }
    // Provenance: mapping every element's original bus gives its reduced bus.
    let check_bus = |kind: &str, id: &str, orig_bus: &str, red_bus: Option<&str>| -> Result<(), String> {
        let mapped = mm.bus_map.get(orig_bus).map(String::as_str);
        if mapped.is_none() || mapped != red_bus {
            return Err(format!("{kind} {id}: bus_map gives {mapped:?}, reduced net has {red_bus:?}"));
        }
        Ok(())
    };
    for g in &original.generators {
        let r = reduced.generators.iter().find(|x| x.id == g.id).map(|x| x.bus.as_str());
        check_bus("generator", &g.id, &g.bus, r)?;
    }
    for s in &original.storage {
        let r = reduced.storage.iter().find(|x| x.id == s.id).map(|x| x.bus.as_str());
        check_bus("storage", &s.id, &s.bus, r)?;
    }
    for l in &original.loads {
        let r = reduced.loads.iter().find(|x| x.id == l.id).map(|x| x.bus.as_str());
        check_bus("load", &l.id, &l.bus, r)?;
    }
    for c in &original.candidates {
        let r = reduced.candidate(&c.id).map(|x| x.bus.as_str());
        check_bus("candidate", &c.id, &c.bus, r)?;
    }
    for t in original.transformers() {
        let r = reduced.branch(&t.id).ok_or(format!("transformer {} lost", t.id))?;
        check_bus("transformer", &t.id, &t.from_bus, Some(&r.from_bus))?;
        check_bus("transformer", &t.id, &t.to_bus, Some(&r.to_bus))?;
    }
    // Series and parallel laws, recomputed from original parameters.
    for l in reduced.lines() {
        let comp = mm
            .line_composition
            .get(&l.id)
            .ok_or(format!("reduced line {} has no composition", l.id))?;
        let eq = comp.equivalent(original).map_err(|e| e.to_string())?;
        if !close(eq.r, l.r, 1e-9) || !close(eq.x, l.x, 1e-9) {
            return Err(format!("line {}: ({}, {}) vs composition ({}, {})", l.id, l.r, l.x, eq.r, eq.x));
        }
    }
    // Every original line is accounted for.
    for l in original.lines() {
        let carried = mm.line_composition.values().any(|c| c.flatten().contains(&l.id));
        if !carried && !mm.removed_lines.contains(&l.id) {
            return Err(format!("original line {} is untracked", l.id));
        }
    }
    Ok(())
}

/// Full mode leaves no line at or below the threshold.
pub fn no_short_lines(reduced: &Network, d_km: f64) -> Result<(), String> {
    for l in reduced.lines() {
        let len = reduced.branch_length_km(l).unwrap();
        if len <= d_km {
            return Err(format!("line {} of {len} km survives D = {d_km}", l.id));
        }
    }
    Ok(())
}
