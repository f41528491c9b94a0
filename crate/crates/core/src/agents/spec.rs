use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::naive::DEFAULT_POLE_HZ;
use super::{
    AvatarController, AvatarFrequencyLaw, CognitiveArchitecture, FixedAgent, NaiveAgent,
    DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN,
};
use crate::error::{Error, Result};
use crate::rl::load_checkpoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Ca,
    Na,
    Fixed,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Ca => "ca",
            AgentKind::Na => "na",
            AgentKind::Fixed => "fixed",
        }
    }
}

fn default_omega_min() -> f64 {
    DEFAULT_OMEGA_MIN
}
fn default_omega_max() -> f64 {
    DEFAULT_OMEGA_MAX
}
fn default_pole() -> f64 {
    DEFAULT_POLE_HZ
}

/// Controller selection as it appears in scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    /// Required for `ca`. Relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Frequency of a `fixed` agent; initial frequency of `ca` and `na`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_pole")]
    pub na_pole_hz: f64,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        AgentSpec {
            kind,
            checkpoint: None,
            omega: None,
            omega_min: DEFAULT_OMEGA_MIN,
            omega_max: DEFAULT_OMEGA_MAX,
            na_pole_hz: DEFAULT_POLE_HZ,
        }
    }

    pub fn fixed(omega: f64) -> Self {
        AgentSpec {
            omega: Some(omega),
            ..AgentSpec::new(AgentKind::Fixed)
        }
    }

    pub fn ca(checkpoint: impl Into<PathBuf>) -> Self {
        AgentSpec {
            checkpoint: Some(checkpoint.into()),
            ..AgentSpec::new(AgentKind::Ca)
        }
    }

    pub fn law(&self) -> Result<AvatarFrequencyLaw> {
        AvatarFrequencyLaw::new(self.omega_min, self.omega_max, self.omega)
    }

    /// Instantiates the controller. `base` resolves relative checkpoint paths.
    pub fn build(&self, dt: f64, base: Option<&Path>) -> Result<Box<dyn AvatarController>> {
        Ok(self.prepare(dt, base)?.make())
    }

    /// Validates the spec and loads any checkpoint once, so many independent
    /// controllers can be made from it.
    pub fn prepare(&self, dt: f64, base: Option<&Path>) -> Result<AgentFactory> {
        Ok(match self.kind {
            AgentKind::Fixed => {
                let omega = self
                    .omega
                    .ok_or_else(|| Error::config("agent.omega", "required for a fixed agent"))?;
                AgentFactory::Fixed(FixedAgent::new(omega)?)
            }
            AgentKind::Na => {
                let law = self.law()?;
                AgentFactory::Na(NaiveAgent::new(self.na_pole_hz, dt, law.omega)?)
            }
            AgentKind::Ca => {
                let path = self
                    .checkpoint
                    .as_ref()
                    .ok_or_else(|| Error::InvalidState("ca agent needs a checkpoint".into()))?;
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let ck = load_checkpoint(&path)?;
                AgentFactory::Ca(CognitiveArchitecture::new(
                    ck.params,
                    ck.hyper.input_map,
                    self.law()?,
                )?)
            }
        })
    }
}

/// A ready-to-clone controller prototype.
#[derive(Debug, Clone)]
pub enum AgentFactory {
    Fixed(FixedAgent),
    Na(NaiveAgent),
    Ca(CognitiveArchitecture),
}

impl AgentFactory {
    pub fn kind(&self) -> AgentKind {
        match self {
            AgentFactory::Fixed(_) => AgentKind::Fixed,
            AgentFactory::Na(_) => AgentKind::Na,
            AgentFactory::Ca(_) => AgentKind::Ca,
        }
    }

    pub fn make(&self) -> Box<dyn AvatarController> {
        match self {
            AgentFactory::Fixed(a) => Box::new(a.clone()),
            AgentFactory::Na(a) => Box::new(a.clone()),
            AgentFactory::Ca(a) => Box::new(a.clone()),
        }
    }
}
