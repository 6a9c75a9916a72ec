//! Deterministic models of self-reinforcing decision overload.
//!
//! The crate is organized bottom-up:
//!
//! * [`tradeoff`] holds the S-shaped workload/accuracy curves every other
//!   model is built from.
//! * [`dyad`] is the two-component headquarters/field loop with its
//!   equilibria, linearized stability test and stability-region sweep.
//! * [`netsim`] wires intermediate and broker components into rooted trees
//!   and measures collapse, stability envelopes and overload propagation.
//! * [`team`] scores a team information structure against forecast
//!   decision characteristics.
//! * [`optimize`] searches information structures with a genetic algorithm
//!   and an exhaustive oracle for small instances.
//!
//! Everything is pure and deterministic. Grid sweeps and population
//! evaluations use rayon and return results in canonical order, so the
//! output never depends on the size of the thread pool.

pub mod dyad;
pub mod error;
pub mod netsim;
pub mod optimize;
pub mod schedule;
pub mod team;
pub mod tradeoff;

pub use error::{Error, Result};
pub use schedule::Schedule;
pub use tradeoff::{DecisionAccuracyModel, SCurve};

/// Default saturation ceiling applied to every message rate.
pub const DEFAULT_SATURATION_CEILING: f64 = 1e6;

/// Outcome of a stability classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        matches!(self, Stability::Stable)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
