use std::collections::HashMap;

use super::MergeMap;
use crate::error::{Error, Result};
use crate::grid::Network;

/// Incident ratings are doubled because every line may be reinforced in the
/// full-network re-solve.
pub const TIGHTEN_FACTOR: f64 = 2.0;

/// Caps each candidate's `max_build` at twice the summed rating of the original
/// branches incident to the candidate's original bus.
pub fn tighten_candidates(reduced: &Network, original: &Network, mm: &MergeMap) -> Result<Network> {
    let mut incident: HashMap<&str, f64> = HashMap::new();
    for br in &original.branches {
        *incident.entry(br.from_bus.as_str()).or_default() += br.rating;
        if br.to_bus != br.from_bus {
            *incident.entry(br.to_bus.as_str()).or_default() += br.rating;
        }
    }
    let mut out = reduced.clone();
    for cand in &mut out.candidates {
        let orig = original
            .candidate(&cand.id)
            .ok_or_else(|| Error::MergeMap(format!("candidate `{}` not in original network", cand.id)))?;
        match mm.relocation.candidates.get(&cand.id) {
            Some(bus) if *bus == cand.bus => {}
            _ => {
                return Err(Error::MergeMap(format!(
                    "candidate `{}` relocation does not match reduced bus `{}`",
                    cand.id, cand.bus
                )))
            }
        }
        let cap = TIGHTEN_FACTOR * incident.get(orig.bus.as_str()).copied().unwrap_or(0.0);
        cand.max_build = cand.max_build.min(cap);
    }
    Ok(out)
}
