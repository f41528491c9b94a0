//! Kuramoto network model: graphs, frequency processes, the Euler map and
//! seeded simulation.

mod dynamics;
mod frequency;
mod graph;
pub(crate) mod sim;

pub use dynamics::{euler_step, wrap_angle, CouplingKernel, NetworkState};
pub use frequency::{FrequencyProcess, FrequencySampler, FREQUENCY_FLOOR};
pub use graph::{attach_avatar, make_complete_graph, make_ring_graph, GraphSpec};
pub use sim::{simulate, InitialPhases, SimConfig, Trajectory};
