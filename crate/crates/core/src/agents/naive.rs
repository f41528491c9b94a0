use std::f64::consts::PI;

use super::{AgentKind, AvatarController, ControlContext, Decision};
use crate::error::{Error, Result};

pub const DEFAULT_POLE_HZ: f64 = 30.0;

/// Unit-gain first-order low-pass `y ← a·y + (1 − a)·u` with
/// `a = exp(−2π f_p dt)`. The first input seeds the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveFilter {
    a: f64,
    y: Option<f64>,
}

impl NaiveFilter {
    pub fn new(pole_hz: f64, dt: f64) -> Result<Self> {
        if !(pole_hz > 0.0 && dt > 0.0 && pole_hz.is_finite() && dt.is_finite()) {
            return Err(Error::invalid("filter pole and dt must be > 0"));
        }
        Ok(NaiveFilter {
            a: (-2.0 * PI * pole_hz * dt).exp(),
            y: None,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.a
    }

    pub fn output(&self) -> Option<f64> {
        self.y
    }

    pub fn reset(&mut self) {
        self.y = None;
    }

    pub fn push(&mut self, u: f64) -> f64 {
        let y = match self.y {
            None => u,
            Some(y) => self.a * y + (1.0 - self.a) * u,
        };
        self.y = Some(y);
        y
    }
}

/// Baseline avatar: its frequency is the filtered mean phase velocity of
/// the participants it is linked to (all participants if it has none).
#[derive(Debug, Clone)]
pub struct NaiveAgent {
    filter: NaiveFilter,
    initial_omega: f64,
}

impl NaiveAgent {
    pub fn new(pole_hz: f64, dt: f64, initial_omega: f64) -> Result<Self> {
        if !(initial_omega > 0.0 && initial_omega.is_finite()) {
            return Err(Error::invalid("initial frequency must be > 0"));
        }
        Ok(NaiveAgent {
            filter: NaiveFilter::new(pole_hz, dt)?,
            initial_omega,
        })
    }

    pub fn filter(&self) -> &NaiveFilter {
        &self.filter
    }

    /// ω_a for one vector of measured phase velocities.
    pub fn na_decide(&mut self, velocities: &[f64]) -> f64 {
        if velocities.is_empty() {
            return self.current_frequency();
        }
        let u = velocities.iter().sum::<f64>() / velocities.len() as f64;
        self.filter.push(u)
    }
}

impl AvatarController for NaiveAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Na
    }

    fn reset(&mut self) {
        self.filter.reset();
    }

    fn current_frequency(&self) -> f64 {
        self.filter.output().unwrap_or(self.initial_omega)
    }

    fn decide(&mut self, ctx: &ControlContext<'_>) -> Decision {
        let mut inputs: Vec<f64> = ctx
            .neighbors
            .iter()
            .filter(|i| ctx.participant_ids.contains(i))
            .map(|&i| ctx.velocities[i])
            .collect();
        if inputs.is_empty() {
            inputs = ctx
                .participant_ids
                .iter()
                .map(|&i| ctx.velocities[i])
                .collect();
        }
        Decision {
            omega: self.na_decide(&inputs),
            action: None,
        }
    }
}
