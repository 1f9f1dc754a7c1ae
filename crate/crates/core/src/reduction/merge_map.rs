use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::equivalent::{parallel_of, series_of, Equivalent, SeriesRating};
use super::ReductionConfig;
use crate::error::{Error, Result};
use crate::grid::Network;

pub const MERGE_MAP_FORMAT: u32 = 1;

/// How a reduced line was assembled from original lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineComposition {
    Line(String),
    /// Ordered along the electrical path; the last element is the outer line
    /// whose rating the chain keeps.
    Series(Vec<LineComposition>),
    Parallel(Vec<LineComposition>),
}

impl LineComposition {
    /// Series composition that keeps nested series chains flat.
    pub(crate) fn series(inner: LineComposition, outer: LineComposition) -> Self {
        let mut parts = Vec::new();
        for c in [inner, outer] {
            match c {
                LineComposition::Series(p) => parts.extend(p),
                other => parts.push(other),
            }
        }
        LineComposition::Series(parts)
    }

    pub(crate) fn parallel(mut parts: Vec<LineComposition>) -> Self {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            LineComposition::Parallel(parts)
        }
    }

    /// Original line ids in path order.
    pub fn flatten(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            LineComposition::Line(id) => out.push(id.clone()),
            LineComposition::Series(p) | LineComposition::Parallel(p) => {
                p.iter().for_each(|c| c.collect(out));
            }
        }
    }

    /// Recomputes the equivalent from original branch parameters.
    pub fn equivalent(&self, original: &Network) -> Result<Equivalent> {
        match self {
            LineComposition::Line(id) => original
                .branch(id)
                .map(Equivalent::from)
                .ok_or_else(|| Error::MergeMap(format!("unknown original line `{id}`"))),
            LineComposition::Series(parts) => {
                let eqs = parts.iter().map(|p| p.equivalent(original)).collect::<Result<Vec<_>>>()?;
                series_of(&eqs, SeriesRating::Outer)
            }
            LineComposition::Parallel(parts) => {
                let eqs = parts.iter().map(|p| p.equivalent(original)).collect::<Result<Vec<_>>>()?;
                parallel_of(&eqs)
            }
        }
    }
}

/// Original element id → reduced bus id, per element kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relocation {
    pub generators: BTreeMap<String, String>,
    pub storage: BTreeMap<String, String>,
    pub loads: BTreeMap<String, String>,
    pub candidates: BTreeMap<String, String>,
}

/// Provenance of a reduction.
///
/// Every reduced line (not transformers, which keep their ids) has an entry in
/// `line_composition`. An original line that was swallowed without a reduced
/// counterpart is listed in `removed_lines`. A collapsed pair line is carried
/// inside the composition of each line re-attached through it, so it may
/// appear in several compositions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeMap {
    pub format: u32,
    pub config: ReductionConfig,
    pub bus_map: BTreeMap<String, String>,
    pub line_composition: BTreeMap<String, LineComposition>,
    pub removed_lines: BTreeSet<String>,
    pub relocation: Relocation,
}

impl MergeMap {
    /// The map of a reduction that changed nothing.
    pub fn identity(net: &Network, config: ReductionConfig) -> Self {
        let ids = |it: &mut dyn Iterator<Item = (&String, &String)>| {
            it.map(|(a, b)| (a.clone(), b.clone())).collect::<BTreeMap<_, _>>()
        };
        Self {
            format: MERGE_MAP_FORMAT,
            config,
            bus_map: net.buses.iter().map(|b| (b.id.clone(), b.id.clone())).collect(),
            line_composition: net
                .lines()
                .map(|l| (l.id.clone(), LineComposition::Line(l.id.clone())))
                .collect(),
            removed_lines: BTreeSet::new(),
            relocation: Relocation {
                generators: ids(&mut net.generators.iter().map(|g| (&g.id, &g.bus))),
                storage: ids(&mut net.storage.iter().map(|s| (&s.id, &s.bus))),
                loads: ids(&mut net.loads.iter().map(|l| (&l.id, &l.bus))),
                candidates: ids(&mut net.candidates.iter().map(|c| (&c.id, &c.bus))),
            },
        }
    }

    pub fn is_identity(&self) -> bool {
        self.removed_lines.is_empty()
            && self.bus_map.iter().all(|(a, b)| a == b)
            && self
                .line_composition
                .iter()
                .all(|(id, c)| matches!(c, LineComposition::Line(o) if o == id))
    }

    /// Reduced lines whose composition contains `original_line`.
    pub fn reduced_lines_containing(&self, original_line: &str) -> Vec<&str> {
        self.line_composition
            .iter()
            .filter(|(_, c)| c.flatten().iter().any(|l| l == original_line))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Original line → reduced lines carrying it.
    pub fn line_owners(&self) -> HashMap<String, Vec<String>> {
        let mut owners: HashMap<String, Vec<String>> = HashMap::new();
        for (reduced, comp) in &self.line_composition {
            for l in comp.flatten() {
                owners.entry(l).or_default().push(reduced.clone());
            }
        }
        owners
    }

    /// Cross-checks the map against the networks it links.
    pub fn check(&self, original: &Network, reduced: &Network) -> Result<()> {
        for bus in &original.buses {
            let target = self
                .bus_map
                .get(&bus.id)
                .ok_or_else(|| Error::MergeMap(format!("bus `{}` missing from bus_map", bus.id)))?;
            if reduced.bus(target).is_none() {
                return Err(Error::MergeMap(format!("bus `{}` maps to unknown `{target}`", bus.id)));
            }
        }
        let check_kind = |kind: &str,
                          map: &BTreeMap<String, String>,
                          orig: &mut dyn Iterator<Item = (&String, &String)>,
                          red: &mut dyn Iterator<Item = (&String, &String)>|
         -> Result<()> {
            let red: HashMap<&String, &String> = red.collect();
            for (id, bus) in orig {
                let to = map
                    .get(id)
                    .ok_or_else(|| Error::MergeMap(format!("{kind} `{id}` missing from relocation")))?;
                if self.bus_map.get(bus) != Some(to) || red.get(id) != Some(&to) {
                    return Err(Error::MergeMap(format!("{kind} `{id}` relocation disagrees with networks")));
                }
            }
            Ok(())
        };
        check_kind(
            "generator",
            &self.relocation.generators,
            &mut original.generators.iter().map(|g| (&g.id, &g.bus)),
            &mut reduced.generators.iter().map(|g| (&g.id, &g.bus)),
        )?;
        check_kind(
            "storage",
            &self.relocation.storage,
            &mut original.storage.iter().map(|g| (&g.id, &g.bus)),
            &mut reduced.storage.iter().map(|g| (&g.id, &g.bus)),
        )?;
        check_kind(
            "load",
            &self.relocation.loads,
            &mut original.loads.iter().map(|g| (&g.id, &g.bus)),
            &mut reduced.loads.iter().map(|g| (&g.id, &g.bus)),
        )?;
        check_kind(
            "candidate",
            &self.relocation.candidates,
            &mut original.candidates.iter().map(|g| (&g.id, &g.bus)),
            &mut reduced.candidates.iter().map(|g| (&g.id, &g.bus)),
        )?;
        for line in reduced.lines() {
            if !self.line_composition.contains_key(&line.id) {
                return Err(Error::MergeMap(format!("reduced line `{}` has no composition", line.id)));
            }
        }
        let owners = self.line_owners();
        for line in original.lines() {
            if !owners.contains_key(&line.id) && !self.removed_lines.contains(&line.id) {
                return Err(Error::MergeMap(format!("original line `{}` is unaccounted for", line.id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("merge map", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mm: MergeMap = serde_json::from_str(text).map_err(|e| Error::parse("merge map", e))?;
        if mm.format != MERGE_MAP_FORMAT {
            return Err(Error::parse("merge map", format!("unsupported format {}", mm.format)));
        }
        Ok(mm)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
