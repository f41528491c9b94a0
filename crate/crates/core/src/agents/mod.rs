//! Avatar controllers.
//!
//! Every controller implements [`AvatarController`] and is driven once per
//! simulation step with a [`ControlContext`]. The frequency it returns is the
//! avatar's natural frequency for that step.

mod ca;
mod fixed;
mod naive;
mod spec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mean_phasor, safe_arg};

pub use ca::CognitiveArchitecture;
pub use fixed::FixedAgent;
pub use naive::{NaiveAgent, NaiveFilter};
pub use spec::{AgentFactory, AgentKind, AgentSpec};

/// Number of discrete frequency adjustments.
pub const NUM_ACTIONS: usize = 11;

/// Frequency adjustment for action `index`: −0.5, −0.4, …, 0.5 rad/s.
pub fn action_delta(index: usize) -> f64 {
    (index as f64 - 5.0) / 10.0
}

/// What a controller sees at step `k`.
#[derive(Debug, Clone, Copy)]
pub struct ControlContext<'a> {
    pub step: u64,
    pub dt: f64,
    pub phases: &'a [f64],
    /// Phase velocity of every node at this state. In simulation this is the
    /// model right-hand side; live sessions supply differenced estimates.
    pub velocities: &'a [f64],
    pub participant_ids: &'a [usize],
    pub avatar: usize,
    /// Nodes the avatar is linked to.
    pub neighbors: &'a [usize],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub omega: f64,
    pub action: Option<usize>,
}

pub trait AvatarController: Send {
    fn kind(&self) -> AgentKind;
    /// Returns the controller to its initial state.
    fn reset(&mut self);
    /// Frequency the avatar currently has (before the next decision).
    fn current_frequency(&self) -> f64;
    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision;
}

/// Three-component RL state: mean phase of the group relative to the avatar,
/// circular variance of those relative phases, and the avatar frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlObservation {
    pub mean_relative_phase: f64,
    pub circular_variance: f64,
    pub omega_a: f64,
}

impl RlObservation {
    pub fn to_array(self) -> [f64; 3] {
        [
            self.mean_relative_phase,
            self.circular_variance,
            self.omega_a,
        ]
    }
}

/// Builds ξ from `q_a = (1/n_p) Σ_{i∈I_p} e^{i(θ_a − θ_i)}`.
pub fn observe(
    phases: &[f64],
    participant_ids: &[usize],
    avatar_phase: f64,
    omega_a: f64,
) -> Result<RlObservation> {
    if participant_ids.is_empty() {
        return Err(Error::invalid("observation needs at least one participant"));
    }
    if let Some(&bad) = participant_ids.iter().find(|&&i| i >= phases.len()) {
        return Err(Error::invalid(format!("participant {bad} out of range")));
    }
    let q = mean_phasor(participant_ids.iter().map(|&i| avatar_phase - phases[i]));
    let (arg, _) = safe_arg(q);
    Ok(RlObservation {
        mean_relative_phase: arg,
        circular_variance: (1.0 - q.norm()).clamp(0.0, 1.0),
        omega_a,
    })
}

/// `ω_a(k+1) = sat(ω_a(k) + Δω(k))` on `[omega_min, omega_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvatarFrequencyLaw {
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega: f64,
}

pub const DEFAULT_OMEGA_MIN: f64 = 2.0;
pub const DEFAULT_OMEGA_MAX: f64 = 6.0;

impl Default for AvatarFrequencyLaw {
    fn default() -> Self {
        AvatarFrequencyLaw::new(DEFAULT_OMEGA_MIN, DEFAULT_OMEGA_MAX, None)
            .expect("valid default bounds")
    }
}

impl AvatarFrequencyLaw {
    /// `initial` defaults to the midpoint of the bounds.
    pub fn new(omega_min: f64, omega_max: f64, initial: Option<f64>) -> Result<Self> {
        if !(omega_min > 0.0 && omega_min < omega_max && omega_max.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
            )));
        }
        let omega = initial.unwrap_or(0.5 * (omega_min + omega_max));
        Ok(AvatarFrequencyLaw {
            omega_min,
            omega_max,
            omega: saturate(omega, omega_min, omega_max),
        })
    }

    pub fn apply(&mut self, delta: f64) -> f64 {
        self.omega = saturate(self.omega + delta, self.omega_min, self.omega_max);
        self.omega
    }
}

/// `min(max(v, lo), hi)`.
#[inline]
pub fn saturate(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn action_grid() {
        assert_eq!(action_delta(5), 0.0);
        assert_eq!(action_delta(0), -0.5);
        assert_eq!(action_delta(10), 0.5);
        assert!((action_delta(7) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn observation_examples() {
        let ob = observe(&[1.0, 1.0, 1.0], &[0, 1], 1.0, 4.0).unwrap();
        assert_eq!(ob.to_array(), [0.0, 0.0, 4.0]);

        let ob = observe(&[1.0 + PI / 2.0, 1.0 - PI / 2.0, 1.0], &[0, 1], 1.0, 4.0).unwrap();
        assert_eq!(ob.mean_relative_phase, 0.0);
        assert!((ob.circular_variance - 1.0).abs() < 1e-12);

        let ob = observe(&[0.7, 1.0], &[0], 1.0, 4.0).unwrap();
        assert!((ob.mean_relative_phase - 0.3).abs() < 1e-12);
        assert!(ob.circular_variance < 1e-12);

        assert!(observe(&[0.0], &[], 0.0, 4.0).is_err());
    }

    #[test]
    fn saturation_holds_bounds() {
        let mut law = AvatarFrequencyLaw::default();
        assert_eq!(law.omega, 4.0);
        for _ in 0..10 {
            law.apply(0.5);
        }
        assert_eq!(law.omega, 6.0);
        law.apply(0.5);
        assert_eq!(law.omega, 6.0);
        for _ in 0..20 {
            law.apply(-0.5);
        }
        assert_eq!(law.omega, 2.0);
        assert!(AvatarFrequencyLaw::new(3.0, 2.0, None).is_err());
    }
}
