//! Distance-threshold network reduction.
//!
//! Reduction runs in two phases. The radial phase repeatedly deletes a line
//! that hangs off a degree-one bus when its endpoints lie within the distance
//! threshold, folding the leaf bus (and everything attached to it) into its
//! neighbour. The meshed phase, enabled by [`ReductionMode::Full`], then
//! collapses every remaining line whose endpoints are within the threshold:
//! one endpoint survives as the primary bus, parallel lines between the pair
//! collapse to their admittance equivalent, and lines hanging off the absorbed
//! bus are re-attached in series with that equivalent.
//!
//! Transformers are never collapsed; they are only re-endpointed.
//!
//! Both phases pick the eligible line with the smallest `(distance, id)` and
//! re-scan after every merge, which makes the output deterministic.

mod equivalent;
mod merge_map;
mod reduce;
mod stats;
mod tighten;

use serde::{Deserialize, Serialize};

pub use equivalent::{parallel_equivalent, series_equivalent, Equivalent, SeriesRating};
pub use merge_map::{LineComposition, MergeMap, Relocation, MERGE_MAP_FORMAT};
pub use reduce::{reduce_network, select_primary_bus, BusRole};
pub use stats::{reduction_stats, NetworkStats, ReductionStats};
pub use tighten::{tighten_candidates, TIGHTEN_FACTOR};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMode {
    /// Only radial lines are collapsed.
    Radial,
    /// Radial lines first, then meshed lines.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    /// Unbounded thresholds are written as the string `"inf"`.
    #[serde(with = "distance_serde")]
    pub distance_km: f64,
    pub mode: ReductionMode,
    #[serde(default)]
    pub tighten: bool,
}

impl ReductionConfig {
    pub fn new(distance_km: f64, mode: ReductionMode) -> Self {
        Self {
            distance_km,
            mode,
            tighten: false,
        }
    }

    pub fn tightened(mut self) -> Self {
        self.tighten = true;
        self
    }

    /// Infinite thresholds are legal and collapse every eligible line.
    pub fn validate(&self) -> Result<()> {
        if self.distance_km.is_nan() || self.distance_km < 0.0 {
            return Err(Error::Config(format!(
                "distance threshold must be >= 0, got {}",
                self.distance_km
            )));
        }
        Ok(())
    }
}

mod distance_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(d: &f64, s: S) -> Result<S::Ok, S::Error> {
        if d.is_infinite() && *d > 0.0 {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Number(*d).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid distance `{t}`"))),
        }
    }
}
