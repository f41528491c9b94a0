//! Kuramoto right-hand side and the forward Euler map.
//!
//! The model integrated here is
//!
//! ```text
//! dθ_i/dt = ω_i + c Σ_j A_ij sin(θ_j − θ_i)
//! ```
//!
//! with phases kept in (−π, π].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::graph::GraphSpec;
use crate::error::{Error, Result};

/// Wraps an angle into (−π, π].
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// The full state of an `n`-node network at step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub phases: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub coupling: f64,
    pub time_step_index: u64,
}

impl NetworkState {
    pub fn new(phases: Vec<f64>, frequencies: Vec<f64>, coupling: f64) -> Result<Self> {
        if phases.len() != frequencies.len() {
            return Err(Error::invalid(format!(
                "{} phases but {} frequencies",
                phases.len(),
                frequencies.len()
            )));
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::invalid(format!(
                "coupling must be >= 0, got {coupling}"
            )));
        }
        Ok(NetworkState {
            phases: phases.into_iter().map(wrap_angle).collect(),
            frequencies,
            coupling,
            time_step_index: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }
}

/// Adjacency compiled to neighbor lists for fast evaluation of coupling sums.
#[derive(Debug, Clone)]
pub struct CouplingKernel {
    neighbors: Vec<Vec<usize>>,
}

impl CouplingKernel {
    pub fn new(graph: &GraphSpec) -> Self {
        CouplingKernel {
            neighbors: graph.neighbor_lists(),
        }
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `out[i] = c Σ_j A_ij sin(θ_j − θ_i)`.
    pub fn coupling_terms(&self, phases: &[f64], c: f64, out: &mut [f64]) {
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            let th = phases[i];
            let s: f64 = nbrs.iter().map(|&j| (phases[j] - th).sin()).sum();
            out[i] = c * s;
        }
    }

    /// In-place Euler update, given precomputed coupling terms.
    #[inline]
    pub fn advance(phases: &mut [f64], frequencies: &[f64], coupling_terms: &[f64], dt: f64) {
        for ((th, &w), &u) in phases.iter_mut().zip(frequencies).zip(coupling_terms) {
            *th = wrap_angle(*th + dt * (w + u));
        }
    }
}

/// One forward Euler step of the network.
///
/// `frequency_overrides` replaces the frequency of selected nodes for this
/// step only (the returned state records the frequencies actually used).
pub fn euler_step(
    state: &NetworkState,
    graph: &GraphSpec,
    dt: f64,
    frequency_overrides: &[(usize, f64)],
) -> Result<NetworkState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    let n = state.n();
    if graph.n != n {
        return Err(Error::invalid(format!(
            "graph has {} nodes but state has {n}",
            graph.n
        )));
    }
    if state.frequencies.len() != n {
        return Err(Error::invalid(
            "frequency vector length differs from phase vector",
        ));
    }
    let mut frequencies = state.frequencies.clone();
    for &(i, w) in frequency_overrides {
        if i >= n {
            return Err(Error::invalid(format!("override index {i} out of range")));
        }
        frequencies[i] = w;
    }
    let kernel = CouplingKernel::new(graph);
    let mut u = vec![0.0; n];
    kernel.coupling_terms(&state.phases, state.coupling, &mut u);
    let mut phases = state.phases.clone();
    CouplingKernel::advance(&mut phases, &frequencies, &u, dt);
    Ok(NetworkState {
        phases,
        frequencies,
        coupling: state.coupling,
        time_step_index: state.time_step_index + 1,
    })
}
