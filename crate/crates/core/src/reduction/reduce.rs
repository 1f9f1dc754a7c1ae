use std::collections::{BTreeSet, HashMap, HashSet};

use super::equivalent::{parallel_of, series_of, Equivalent, SeriesRating};
use super::merge_map::{LineComposition, MergeMap, Relocation, MERGE_MAP_FORMAT};
use super::{ReductionConfig, ReductionMode};
use crate::error::Result;
use crate::grid::{haversine_distance, Branch, Bus, Network};

/// What the primary-bus rule needs to know about one endpoint.
#[derive(Debug, Clone, Copy)]
pub struct BusRole<'a> {
    pub id: &'a str,
    pub is_substation: bool,
    /// Already the product of an earlier merge.
    pub merged: bool,
    pub degree: usize,
}

/// Picks `(primary, secondary)` for a line oriented `from → to`.
///
/// Priority: the lone substation, then the lone already-merged bus, then the
/// strictly higher degree, then the `from` bus.
pub fn select_primary_bus<'a>(from: &BusRole<'a>, to: &BusRole<'a>) -> (&'a str, &'a str) {
    let from_wins = if from.is_substation != to.is_substation {
        from.is_substation
    } else if from.merged != to.merged {
        from.merged
    } else if from.degree != to.degree {
        from.degree > to.degree
    } else {
        true
    };
    if from_wins {
        (from.id, to.id)
    } else {
        (to.id, from.id)
    }
}

struct WorkBus {
    bus: Bus,
    merged: bool,
    alive: bool,
}

struct WorkBranch {
    branch: Branch,
    comp: LineComposition,
    alive: bool,
}

struct Reducer {
    buses: Vec<WorkBus>,
    bus_index: HashMap<String, usize>,
    branches: Vec<WorkBranch>,
    /// Original bus → current bus.
    rep: Vec<(String, String)>,
    removed: BTreeSet<String>,
}

impl Reducer {
    fn new(net: &Network) -> Self {
        Self {
            buses: net
                .buses
                .iter()
                .map(|b| WorkBus {
                    bus: b.clone(),
                    merged: false,
                    alive: true,
                })
                .collect(),
            bus_index: net.buses.iter().enumerate().map(|(i, b)| (b.id.clone(), i)).collect(),
            branches: net
                .branches
                .iter()
                .map(|b| WorkBranch {
                    branch: b.clone(),
                    comp: LineComposition::Line(b.id.clone()),
                    alive: true,
                })
                .collect(),
            rep: net.buses.iter().map(|b| (b.id.clone(), b.id.clone())).collect(),
            removed: BTreeSet::new(),
        }
    }

    fn work_bus(&self, id: &str) -> &WorkBus {
        &self.buses[self.bus_index[id]]
    }

    fn length(&self, br: &Branch) -> f64 {
        haversine_distance(
            self.work_bus(&br.from_bus).bus.location,
            self.work_bus(&br.to_bus).bus.location,
        )
    }

    fn degrees(&self) -> HashMap<&str, usize> {
        let mut deg: HashMap<&str, usize> = HashMap::new();
        for wb in self.branches.iter().filter(|b| b.alive) {
            *deg.entry(wb.branch.from_bus.as_str()).or_default() += 1;
            *deg.entry(wb.branch.to_bus.as_str()).or_default() += 1;
        }
        deg
    }

    /// Eligible alive line with the smallest `(distance, id)`.
    fn next_line(&self, threshold: f64, radial_only: bool) -> Option<usize> {
        let deg = self.degrees();
        let degree = |b: &str| deg.get(b).copied().unwrap_or(0);
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, wb)| wb.alive && wb.branch.is_line())
            .filter(|(_, wb)| {
                !radial_only || degree(&wb.branch.from_bus) == 1 || degree(&wb.branch.to_bus) == 1
            })
            .map(|(i, wb)| (self.length(&wb.branch), i))
            .filter(|(d, _)| *d <= threshold)
            .min_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then_with(|| self.branches[a.1].branch.id.cmp(&self.branches[b.1].branch.id))
            })
            .map(|(_, i)| i)
    }

    fn kill_line(&mut self, idx: usize) {
        let wb = &mut self.branches[idx];
        wb.alive = false;
        self.removed.extend(wb.comp.flatten());
    }

    /// Folds `secondary` into `primary` and re-endpoints every branch.
    fn merge_buses(&mut self, primary: &str, secondary: &str) {
        let (pi, si) = (self.bus_index[primary], self.bus_index[secondary]);
        let sub = self.buses[si].bus.is_substation;
        self.buses[si].alive = false;
        let p = &mut self.buses[pi];
        p.merged = true;
        p.bus.is_substation |= sub;
        for (_, cur) in self.rep.iter_mut() {
            if cur == secondary {
                *cur = primary.to_string();
            }
        }
        let mut loops = Vec::new();
        for (i, wb) in self.branches.iter_mut().enumerate().filter(|(_, b)| b.alive) {
            if wb.branch.from_bus == secondary {
                wb.branch.from_bus = primary.to_string();
            }
            if wb.branch.to_bus == secondary {
                wb.branch.to_bus = primary.to_string();
            }
            if wb.branch.is_line() && wb.branch.from_bus == wb.branch.to_bus {
                loops.push(i);
            }
        }
        for i in loops {
            self.kill_line(i);
        }
    }

    fn radial_pass(&mut self, threshold: f64) {
        while let Some(idx) = self.next_line(threshold, true) {
            let deg = self.degrees();
            let br = &self.branches[idx].branch;
            let (from, to) = (br.from_bus.clone(), br.to_bus.clone());
            let (primary, secondary) = if deg.get(from.as_str()).copied().unwrap_or(0) > 1 {
                (from, to)
            } else {
                (to, from)
            };
            self.kill_line(idx);
            self.merge_buses(&primary, &secondary);
        }
    }

    fn meshed_pass(&mut self, threshold: f64) {
        while let Some(idx) = self.next_line(threshold, false) {
            let (primary, secondary) = {
                let deg = self.degrees();
                let br = &self.branches[idx].branch;
                let role = |id: &'_ str| {
                    let wb = self.work_bus(id);
                    (wb.bus.is_substation, wb.merged, deg.get(id).copied().unwrap_or(0))
                };
                let (fs, fm, fd) = role(&br.from_bus);
                let (ts, tm, td) = role(&br.to_bus);
                let from = BusRole {
                    id: &br.from_bus,
                    is_substation: fs,
                    merged: fm,
                    degree: fd,
                };
                let to = BusRole {
                    id: &br.to_bus,
                    is_substation: ts,
                    merged: tm,
                    degree: td,
                };
                let (p, s) = select_primary_bus(&from, &to);
                (p.to_string(), s.to_string())
            };

            // Collapse every line between the pair into one equivalent.
            let group: Vec<usize> = self
                .branches
                .iter()
                .enumerate()
                .filter(|(_, wb)| {
                    wb.alive
                        && wb.branch.is_line()
                        && wb.branch.touches(&primary)
                        && wb.branch.touches(&secondary)
                })
                .map(|(i, _)| i)
                .collect();
            let pair_eq = parallel_of(
                &group
                    .iter()
                    .map(|&i| Equivalent::from(&self.branches[i].branch))
                    .collect::<Vec<_>>(),
            )
            .expect("validated lines have nonzero impedance");
            let pair_comp =
                LineComposition::parallel(group.iter().map(|&i| self.branches[i].comp.clone()).collect());
            for &i in &group {
                self.branches[i].alive = false;
            }

            let outer: Vec<usize> = self
                .branches
                .iter()
                .enumerate()
                .filter(|(_, wb)| {
                    wb.alive
                        && wb.branch.is_line()
                        && wb.branch.touches(&secondary)
                        && !wb.branch.touches(&primary)
                })
                .map(|(i, _)| i)
                .collect();
            if outer.is_empty() {
                self.removed.extend(pair_comp.flatten());
            }
            for i in outer {
                let wb = &mut self.branches[i];
                let eq = series_of(&[pair_eq, Equivalent::from(&wb.branch)], SeriesRating::Outer)
                    .expect("nonempty chain");
                wb.branch.r = eq.r;
                wb.branch.x = eq.x;
                wb.branch.rating = eq.rating;
                wb.comp = LineComposition::series(pair_comp.clone(), wb.comp.clone());
            }
            self.merge_buses(&primary, &secondary);
        }
    }

    fn finish(mut self, net: &Network, cfg: ReductionConfig) -> (Network, MergeMap) {
        assign_line_ids(&mut self.branches);
        let rep: HashMap<&str, &str> = self.rep.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let to = |bus: &str| rep[bus].to_string();

        let mut reduced = Network {
            buses: self.buses.iter().filter(|b| b.alive).map(|b| b.bus.clone()).collect(),
            branches: self
                .branches
                .iter()
                .filter(|b| b.alive)
                .map(|b| b.branch.clone())
                .collect(),
            generators: net.generators.clone(),
            storage: net.storage.clone(),
            loads: net.loads.clone(),
            candidates: net.candidates.clone(),
        };
        let mut relocation = Relocation::default();
        for g in &mut reduced.generators {
            g.bus = to(&g.bus);
            relocation.generators.insert(g.id.clone(), g.bus.clone());
        }
        for s in &mut reduced.storage {
            s.bus = to(&s.bus);
            relocation.storage.insert(s.id.clone(), s.bus.clone());
        }
        for l in &mut reduced.loads {
            l.bus = to(&l.bus);
            relocation.loads.insert(l.id.clone(), l.bus.clone());
        }
        for c in &mut reduced.candidates {
            c.bus = to(&c.bus);
            relocation.candidates.insert(c.id.clone(), c.bus.clone());
        }

        let mm = MergeMap {
            format: MERGE_MAP_FORMAT,
            config: cfg,
            bus_map: self.rep.iter().cloned().collect(),
            line_composition: self
                .branches
                .iter()
                .filter(|b| b.alive && b.branch.is_line())
                .map(|b| (b.branch.id.clone(), b.comp.clone()))
                .collect(),
            removed_lines: self.removed,
            relocation,
        };
        (reduced, mm)
    }
}

const MAX_JOINED_ID: usize = 64;

/// Lines built from several originals are named by joining the originals,
/// e.g. `A-C`; overly long names fall back to `<outer>~<count>`.
fn assign_line_ids(branches: &mut [WorkBranch]) {
    let mut used: HashSet<String> = branches
        .iter()
        .filter(|b| b.alive && !matches!(b.comp, LineComposition::Series(_) | LineComposition::Parallel(_)))
        .map(|b| b.branch.id.clone())
        .collect();
    for wb in branches.iter_mut().filter(|b| b.alive) {
        if matches!(wb.comp, LineComposition::Line(_)) {
            continue;
        }
        let parts = wb.comp.flatten();
        let joined = parts.join("-");
        let id = if joined.len() <= MAX_JOINED_ID && !used.contains(&joined) {
            joined
        } else {
            let mut n = parts.len();
            loop {
                let candidate = format!("{}~{n}", wb.branch.id);
                if !used.contains(&candidate) {
                    break candidate;
                }
                n += 1;
            }
        };
        used.insert(id.clone());
        wb.branch.id = id;
    }
}

/// Reduces `net` under `cfg`. The tightening flag is not applied here; see
/// [`super::tighten_candidates`].
pub fn reduce_network(net: &Network, cfg: &ReductionConfig) -> Result<(Network, MergeMap)> {
    cfg.validate()?;
    let mut reducer = Reducer::new(net);
    reducer.radial_pass(cfg.distance_km);
    if cfg.mode == ReductionMode::Full {
        reducer.meshed_pass(cfg.distance_km);
    }
    Ok(reducer.finish(net, *cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BranchKind, GeoCoord, Load};

    fn role(id: &str, sub: bool, merged: bool, degree: usize) -> BusRole<'_> {
        BusRole {
            id,
            is_substation: sub,
            merged,
            degree,
        }
    }

    #[test]
    fn primary_rule_order() {
        // substation wins over everything else
        assert_eq!(
            select_primary_bus(&role("i", true, false, 1), &role("j", false, true, 5)),
            ("i", "j")
        );
        // merged wins when substation status ties
        assert_eq!(
            select_primary_bus(&role("i", false, true, 1), &role("j", false, false, 5)),
            ("i", "j")
        );
        // both substations: fall through to merged, then degree
        assert_eq!(
            select_primary_bus(&role("i", true, false, 2), &role("j", true, false, 3)),
            ("j", "i")
        );
        // everything tied: the from bus. Line oriented j -> i.
        assert_eq!(
            select_primary_bus(&role("j", false, false, 2), &role("i", false, false, 2)),
            ("j", "i")
        );
    }

    fn bus(id: &str, lat: f64, lon: f64) -> Bus {
        Bus {
            id: id.into(),
            location: GeoCoord::new(lat, lon),
            is_substation: false,
            base_kv: 138.0,
        }
    }

    fn line(id: &str, a: &str, b: &str, r: f64, x: f64, rating: f64) -> Branch {
        Branch {
            id: id.into(),
            from_bus: a.into(),
            to_bus: b.into(),
            kind: BranchKind::Line,
            r,
            x,
            rating,
            reinforce_cost: 0.0,
            reinforcible: true,
        }
    }

    #[test]
    fn zero_distance_is_identity() {
        let net = Network {
            buses: vec![bus("a", 35.0, -110.0), bus("b", 35.1, -110.0), bus("c", 35.2, -110.0)],
            branches: vec![line("l1", "a", "b", 0.01, 0.1, 5.0), line("l2", "b", "c", 0.01, 0.1, 5.0)],
            ..Default::default()
        };
        let cfg = ReductionConfig::new(0.0, ReductionMode::Full);
        let (reduced, mm) = reduce_network(&net, &cfg).unwrap();
        assert_eq!(reduced, net);
        assert_eq!(mm, MergeMap::identity(&net, cfg));
        assert!(mm.is_identity());
    }

    #[test]
    fn radial_chain_folds_to_the_mesh() {
        // a - b - c spur, c the leaf; everything within 50 km.
        let net = Network {
            buses: vec![bus("a", 35.0, -110.0), bus("b", 35.01, -110.0), bus("c", 35.02, -110.0)],
            branches: vec![line("l1", "a", "b", 0.01, 0.1, 5.0), line("l2", "b", "c", 0.01, 0.1, 5.0)],
            loads: vec![Load {
                id: "d".into(),
                bus: "c".into(),
                profile_key: "p".into(),
                peak: 3.0,
            }],
            ..Default::default()
        };
        let (reduced, mm) = reduce_network(&net, &ReductionConfig::new(50.0, ReductionMode::Radial)).unwrap();
        assert_eq!(reduced.buses.len(), 1);
        assert!(reduced.branches.is_empty());
        assert_eq!(mm.removed_lines.len(), 2);
        assert_eq!(reduced.loads[0].bus, reduced.buses[0].id);
        mm.check(&net, &reduced).unwrap();
    }

    #[test]
    fn parallel_pair_with_no_outer_lines_is_removed() {
        let mut b2 = bus("b", 35.001, -110.0);
        b2.is_substation = true;
        let net = Network {
            buses: vec![bus("a", 35.0, -110.0), b2],
            branches: vec![line("p1", "a", "b", 0.01, 0.1, 5.0), line("p2", "a", "b", 0.01, 0.1, 5.0)],
            ..Default::default()
        };
        let (reduced, mm) = reduce_network(&net, &ReductionConfig::new(1.0, ReductionMode::Full)).unwrap();
        assert_eq!(reduced.buses.len(), 1);
        assert_eq!(reduced.buses[0].id, "b");
        assert_eq!(mm.removed_lines.iter().cloned().collect::<Vec<_>>(), vec!["p1", "p2"]);
    }

    #[test]
    fn outer_line_keeps_its_rating_and_adds_pair_impedance() {
        // Ring a-b-c-a; only a-b is short. b becomes secondary (a is the substation).
        let mut a = bus("a", 35.0, -110.0);
        a.is_substation = true;
        let net = Network {
            buses: vec![a, bus("b", 35.001, -110.0), bus("c", 35.5, -110.0)],
            branches: vec![
                line("ab", "a", "b", 0.01, 0.1, 9.0),
                line("bc", "b", "c", 0.02, 0.2, 4.0),
                line("ca", "c", "a", 0.03, 0.3, 7.0),
            ],
            ..Default::default()
        };
        let (reduced, mm) = reduce_network(&net, &ReductionConfig::new(1.0, ReductionMode::Full)).unwrap();
        assert_eq!(reduced.buses.len(), 2);
        let merged = reduced.branch("ab-bc").expect("series line");
        assert!((merged.r - 0.03).abs() < 1e-12 && (merged.x - 0.3).abs() < 1e-12);
        assert_eq!(merged.rating, 4.0);
        assert_eq!((merged.from_bus.as_str(), merged.to_bus.as_str()), ("a", "c"));
        assert_eq!(mm.line_composition["ab-bc"].flatten(), vec!["ab", "bc"]);
        assert_eq!(reduced.branch("ca").unwrap().rating, 7.0);
        mm.check(&net, &reduced).unwrap();
    }

    #[test]
    fn negative_distance_rejected() {
        let net = Network::default();
        assert!(reduce_network(&net, &ReductionConfig::new(-1.0, ReductionMode::Full)).is_err());
        assert!(reduce_network(&net, &ReductionConfig::new(f64::NAN, ReductionMode::Full)).is_err());
    }
}
