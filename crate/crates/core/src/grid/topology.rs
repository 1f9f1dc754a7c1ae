use std::collections::{BTreeSet, HashMap};

use super::Network;
use crate::error::{Error, Result};

/// Number of branches, lines and transformers alike, incident to `bus`.
/// A self-loop counts twice.
pub fn bus_degree(net: &Network, bus: &str) -> Result<usize> {
    if net.bus(bus).is_none() {
        return Err(Error::UnknownBus(bus.to_string()));
    }
    Ok(net
        .branches
        .iter()
        .map(|b| (b.from_bus == bus) as usize + (b.to_bus == bus) as usize)
        .sum())
}

/// Degree of every bus in one pass.
pub fn degree_map(net: &Network) -> HashMap<&str, usize> {
    let mut deg: HashMap<&str, usize> = net.buses.iter().map(|b| (b.id.as_str(), 0)).collect();
    for br in &net.branches {
        for end in [&br.from_bus, &br.to_bus] {
            if let Some(d) = deg.get_mut(end.as_str()) {
                *d += 1;
            }
        }
    }
    deg
}

/// Lines (never transformers) with at least one endpoint of degree one.
pub fn radial_lines(net: &Network) -> BTreeSet<String> {
    let deg = degree_map(net);
    net.lines()
        .filter(|l| {
            deg.get(l.from_bus.as_str()) == Some(&1) || deg.get(l.to_bus.as_str()) == Some(&1)
        })
        .map(|l| l.id.clone())
        .collect()
}

/// Connected components of the bus graph, optionally restricted to lines.
/// Components are sorted by their smallest bus id; buses within a component
/// are sorted too.
pub fn line_components(net: &Network, lines_only: bool) -> Vec<Vec<String>> {
    let index: HashMap<&str, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..net.buses.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for br in &net.branches {
        if lines_only && !br.is_line() {
            continue;
        }
        if let (Some(&a), Some(&b)) = (index.get(br.from_bus.as_str()), index.get(br.to_bus.as_str())) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut groups: HashMap<usize, Vec<String>> = HashMap::new();
    for (i, bus) in net.buses.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(bus.id.clone());
    }
    let mut out: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    out.sort();
    out
}
