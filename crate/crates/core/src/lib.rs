//! Kuramoto-network simulation, synchronization metrics and reinforcement
//! learning avatars that steer a group toward phase synchrony.

pub mod agents;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kuramoto;
#[cfg(feature = "live")]
pub mod live;
pub mod metrics;
pub mod phase;
pub mod rl;
pub mod rng;
pub mod run;
pub mod theory;

pub use error::{Error, Result};
