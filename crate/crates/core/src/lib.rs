//! Spatial aggregation of nodal power networks and two-step capacity
//! expansion planning.
//!
//! The pipeline: [`reduction`] collapses nearby buses of a [`grid::Network`];
//! [`cep`] builds capacity-expansion MILPs over either network; [`solver`]
//! solves them through an external MILP solver or an exhaustive internal
//! oracle; [`two_step`] maps the reduced-network investments back onto the
//! original network and re-solves; [`metrics`] scores the result.

pub mod cep;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod milp;
pub mod reduction;
pub mod scenarios;
pub mod solver;
pub mod two_step;

pub use error::{Error, Result};
