//! Simulation and planning primitives for a multi-depot fleet of delivery UAVs.
//!
//! Everything in this crate is deterministic given a seed and free of IO, so it
//! builds for `no_std` targets with an allocator. File formats, the CLI and
//! parallel experiment fan-out live in the `fleetsim` companion crate.
//!
//! Module map:
//!
//! * [`geometry`] - square service area, depot placement, multi-median values.
//! * [`fleet`] - system configuration, jobs, vehicles, battery dynamics.
//! * [`policies`] - the four job-selection policies and battery gating.
//! * [`engine`] - the discrete-time simulation loop and replications.
//! * [`stats`] - Welch warm-up, replication/deletion, instability detection.
//! * [`analysis`] - load factor, stability conditions, expenditure frontier.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod engine;
mod error;
pub mod fleet;
pub mod geometry;
pub mod policies;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
pub use fleet::SystemConfig;
pub use geometry::{DepotLayout, Point, ServiceArea};
pub use policies::PolicyId;
