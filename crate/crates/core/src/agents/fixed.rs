use super::{AgentKind, AvatarController, ControlContext, Decision};
use crate::error::{Error, Result};

/// Avatar with a constant natural frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedAgent {
    omega: f64,
}

impl FixedAgent {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid(format!(
                "fixed agent frequency must be > 0, got {omega}"
            )));
        }
        Ok(FixedAgent { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

impl AvatarController for FixedAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Fixed
    }

    fn reset(&mut self) {}

    fn current_frequency(&self) -> f64 {
        self.omega
    }

    fn decide(&mut self, _ctx: &ControlContext<'_>) -> Decision {
        Decision {
            omega: self.omega,
            action: None,
        }
    }
}
