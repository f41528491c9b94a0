use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentFactory, AgentSpec};
use crate::error::{Error, Result};
use crate::kuramoto::{
    attach_avatar, simulate, FrequencyProcess, GraphSpec, InitialPhases, SimConfig, Trajectory,
};
use crate::metrics::{mean_phasor, safe_arg, MetricsSeries};
use crate::rng::split;

/// Sliding window for the group synchronization indices.
pub const DEFAULT_WINDOW: f64 = 5.0;

fn default_dt() -> f64 {
    0.01
}

/// The human group being studied, before any avatar is added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub graph: GraphSpec,
    pub coupling: f64,
    pub freq_process: FrequencyProcess,
    pub initial_phases: InitialPhases,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplaceRule {
    /// Participant whose mean frequency is closest to the group mean.
    Closest,
    Farthest,
}

/// How an avatar joins the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvatarPlacement {
    pub agent: AgentSpec,
    /// Participants the avatar links to; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<Vec<usize>>,
    /// Take over one participant's node and edges instead of adding a node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replace: Option<ReplaceRule>,
}

impl AvatarPlacement {
    pub fn connected_to_all(agent: AgentSpec) -> Self {
        AvatarPlacement {
            agent,
            neighbors: None,
            replace: None,
        }
    }
}

/// Index of the participant picked by `rule`; ties go to the lowest index.
pub fn replaced_participant(means: &[f64], rule: ReplaceRule) -> Result<usize> {
    if means.is_empty() {
        return Err(Error::invalid("no participant to replace"));
    }
    let avg = means.iter().sum::<f64>() / means.len() as f64;
    let dist: Vec<f64> = means.iter().map(|m| (m - avg).abs()).collect();
    let mut best = 0;
    for i in 1..dist.len() {
        let better = match rule {
            ReplaceRule::Closest => dist[i] < dist[best],
            ReplaceRule::Farthest => dist[i] > dist[best],
        };
        if better {
            best = i;
        }
    }
    Ok(best)
}

impl GroupSpec {
    pub fn n_participants(&self) -> usize {
        self.graph.n
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.freq_process.len() != self.graph.n {
            return Err(Error::config(
                "group.freq_process",
                format!(
                    "{} entries for {} participants",
                    self.freq_process.len(),
                    self.graph.n
                ),
            ));
        }
        self.freq_process.validate("group.freq_process")?;
        if let InitialPhases::Explicit(v) = &self.initial_phases {
            if v.len() != self.graph.n {
                return Err(Error::config(
                    "group.initial_phases",
                    format!("{} angles for {} participants", v.len(), self.graph.n),
                ));
            }
        }
        if !(self.coupling >= 0.0 && self.dt > 0.0 && self.duration >= self.dt) {
            return Err(Error::config(
                "group",
                "need coupling >= 0, dt > 0 and duration >= dt",
            ));
        }
        Ok(())
    }

    /// Group phases for one run, drawn from a stream separate from the
    /// frequency draws so runs with and without an avatar see the same group.
    fn resolve_phases(&self, seed: u64) -> Vec<f64> {
        let n = self.graph.n;
        crate::kuramoto::sim::initial_phases(&self.initial_phases, n, &mut split(seed, 1))
    }

    /// Full simulation config for one run. Without replacement the avatar is
    /// node `n` and starts at the mean phase of its neighbors.
    pub fn sim_config(&self, avatar: Option<&AvatarPlacement>, seed: u64) -> Result<SimConfig> {
        self.validate()?;
        let n = self.graph.n;
        let mut phases = self.resolve_phases(seed);
        let base = |graph, freq_process, initial, participant_ids, avatar_ids| SimConfig {
            dt: self.dt,
            duration: self.duration,
            coupling: self.coupling,
            graph,
            freq_process,
            initial_phases: InitialPhases::Explicit(initial),
            rng_seed: seed,
            participant_ids,
            avatar_ids,
        };
        let Some(av) = avatar else {
            return Ok(base(
                self.graph.clone(),
                self.freq_process.clone(),
                phases,
                (0..n).collect(),
                vec![],
            ));
        };
        match (av.replace, &av.neighbors) {
            (Some(_), Some(_)) => Err(Error::config(
                "avatar.neighbors",
                "cannot be combined with a replace rule",
            )),
            (Some(rule), None) => {
                if n < 2 {
                    return Err(Error::config(
                        "avatar.replace",
                        "group needs two participants",
                    ));
                }
                let k = replaced_participant(&self.freq_process.means(), rule)?;
                let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
                Ok(base(
                    self.graph.clone(),
                    self.freq_process.select(&keep),
                    phases,
                    keep,
                    vec![k],
                ))
            }
            (None, nb) => {
                let nb: Vec<usize> = nb.clone().unwrap_or_else(|| (0..n).collect());
                let graph = attach_avatar(&self.graph, &nb)?;
                let (arg, _) = safe_arg(mean_phasor(nb.iter().map(|&j| phases[j])));
                phases.push(arg);
                Ok(base(
                    graph,
                    self.freq_process.clone(),
                    phases,
                    (0..n).collect(),
                    vec![n],
                ))
            }
        }
    }
}

/// Time-averaged outcome of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub r_net: f64,
    pub r_tot: f64,
    pub rho_net: Option<f64>,
    pub rho_tot: Option<f64>,
    /// Mean avatar frequency over the run.
    pub mean_omega_a: Option<f64>,
}

pub struct RunOutput {
    pub trajectory: Trajectory,
    pub metrics: MetricsSeries,
    pub summary: RunSummary,
}

/// Prepares the avatar controller, resolving relative checkpoints against
/// `base`.
pub fn prepare_agent(
    avatar: Option<&AvatarPlacement>,
    dt: f64,
    base: Option<&Path>,
) -> Result<Option<AgentFactory>> {
    avatar.map(|a| a.agent.prepare(dt, base)).transpose()
}

pub fn run_once(
    group: &GroupSpec,
    avatar: Option<(&AvatarPlacement, &AgentFactory)>,
    seed: u64,
) -> Result<RunOutput> {
    let cfg = group.sim_config(avatar.map(|a| a.0), seed)?;
    let mut agents: Vec<_> = avatar.map(|a| a.1.make()).into_iter().collect();
    let trajectory = simulate(&cfg, &mut agents)?;
    let metrics = MetricsSeries::from_trajectory(&trajectory, DEFAULT_WINDOW)?;
    let mean_omega_a = cfg.avatar_ids.first().map(|&a| {
        let steps = trajectory.steps().max(1);
        trajectory.frequencies[..steps]
            .iter()
            .map(|f| f[a])
            .sum::<f64>()
            / steps as f64
    });
    let m = metrics.averages;
    Ok(RunOutput {
        summary: RunSummary {
            seed,
            r_net: m.r_net,
            r_tot: m.r_tot,
            rho_net: m.rho_net,
            rho_tot: m.rho_tot,
            mean_omega_a,
        },
        trajectory,
        metrics,
    })
}
