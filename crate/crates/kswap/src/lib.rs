//! Exact k-swap local search for makespan scheduling on identical machines.
//!
//! Processing times are dyadic rationals (integer numerators over a shared
//! power-of-two denominator), so loads, potentials, gaps, and the minimum
//! swap imbalance delta_min are all computed without rounding. On top of the
//! search sit a replay validator for the per-iteration invariants, a phase
//! decomposition for k = 2 runs, independent brute-force oracles, and a
//! Monte-Carlo harness for the one-step perturbation model.

pub mod analysis;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod neighborhood;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod search;
pub mod trace;

pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use instance::Instance;
pub use schedule::{LoadTable, Schedule};
