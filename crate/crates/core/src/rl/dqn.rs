use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::env::{KuramotoEnv, TrainingScenario};
use super::mlp::{mlp_backward, MlpParams, QTarget, DEFAULT_LAYERS};
use super::policy::{argmax, select_action};
use super::replay::{ReplayBuffer, Transition, DEFAULT_CAPACITY};
use crate::agents::{AvatarController, CognitiveArchitecture};
use crate::error::{Error, Result};
use crate::io::{create_file, fmt_f64};
use crate::kuramoto::simulate;
use crate::metrics::MetricsSeries;
use crate::rng::{derive_seed, split};

const EPISODE_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqnHyper {
    pub layer_sizes: Vec<usize>,
    pub epsilon: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Environment steps between hard copies of the online network into the
    /// target network.
    pub target_sync: usize,
    pub adam: AdamConfig,
    #[serde(default)]
    pub input_map: InputMap,
    /// Bootstrap through the end-of-episode transition instead of cutting
    /// the return there. The horizon is not part of ξ, so a cut makes the
    /// last transition look like an unpredictable drop in value.
    #[serde(default = "yes")]
    pub bootstrap_at_time_limit: bool,
}

/// Affine map applied to an observation before it enters the network:
/// `x_j = (ξ_j − offset_j) · scale_j`. The default brings ω_a from
/// [2, 6] onto [−1, 1] and leaves the other components alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub offset: [f64; 3],
    pub scale: [f64; 3],
}

impl Default for InputMap {
    fn default() -> Self {
        InputMap {
            offset: [0.0, 0.0, 4.0],
            scale: [1.0, 1.0, 0.5],
        }
    }
}

impl InputMap {
    pub fn apply(&self, xi: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|j| (xi[j] - self.offset[j]) * self.scale[j])
    }

    pub fn validate(&self) -> Result<()> {
        if self.offset.iter().chain(&self.scale).all(|v| v.is_finite())
            && self.scale.iter().all(|&s| s != 0.0)
        {
            Ok(())
        } else {
            Err(Error::config(
                "hyper.input_map",
                "entries must be finite with nonzero scale",
            ))
        }
    }
}

fn yes() -> bool {
    true
}

impl Default for DqnHyper {
    fn default() -> Self {
        DqnHyper {
            layer_sizes: DEFAULT_LAYERS.to_vec(),
            epsilon: 0.1,
            gamma: 0.9,
            batch_size: 32,
            replay_capacity: DEFAULT_CAPACITY,
            target_sync: 500,
            adam: AdamConfig::default(),
            input_map: InputMap::default(),
            bootstrap_at_time_limit: true,
        }
    }
}

impl DqnHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("hyper.epsilon", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("hyper.gamma", "must lie in [0, 1)"));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(Error::config(
                "hyper.batch_size",
                "need 0 < batch_size <= replay_capacity",
            ));
        }
        if self.target_sync == 0 {
            return Err(Error::config("hyper.target_sync", "must be >= 1"));
        }
        let l = &self.layer_sizes;
        if l.len() < 2
            || l[0] != 3
            || l[l.len() - 1] != crate::agents::NUM_ACTIONS
            || l.contains(&0)
        {
            return Err(Error::config(
                "hyper.layer_sizes",
                "must map 3 inputs to 11 outputs",
            ));
        }
        self.input_map.validate()?;
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::config("hyper.adam.learning_rate", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub episode_return: f64,
    pub mean_r_tot: f64,
    pub mean_loss: f64,
    pub buffer_len: usize,
    pub final_omega_a: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = create_file(path)?;
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "episode,return,mean_r_tot,mean_loss,buffer_len,final_omega_a"
        )
        .map_err(io)?;
        for e in &self.episodes {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                e.episode,
                fmt_f64(e.episode_return),
                fmt_f64(e.mean_r_tot),
                fmt_f64(e.mean_loss),
                e.buffer_len,
                fmt_f64(e.final_omega_a)
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Seed of training episode `episode` for run seed `seed`.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(seed, &[EPISODE_STREAM, episode as u64])
}

/// Held-out evaluation seeds, disjoint from the training stream.
pub fn evaluation_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count)
        .map(|i| derive_seed(seed, &[EVAL_STREAM, i as u64]))
        .collect()
}

/// Warm start for [`train`].
#[derive(Debug, Clone)]
pub struct Resume {
    pub params: MlpParams,
    /// Episodes already completed; numbering and episode seeds continue
    /// from here.
    pub episodes_done: usize,
}

/// `r + γ max_a' Q_target(ξ', a')`, or `r` alone on a cut terminal.
pub fn td_target(t: &Transition, q_next: &[f64], hyper: &DqnHyper) -> f64 {
    if t.terminal && !hyper.bootstrap_at_time_limit {
        t.reward
    } else {
        t.reward + hyper.gamma * q_next[argmax(q_next)]
    }
}

/// Deep Q-learning on `scenario`. Returns the online network and one log
/// row per episode.
pub fn train(
    scenario: &TrainingScenario,
    hyper: &DqnHyper,
    episodes: usize,
    seed: u64,
    resume: Option<Resume>,
) -> Result<(MlpParams, TrainingLog)> {
    scenario.validate()?;
    hyper.validate()?;
    let mut rng = split(seed, 0);
    let (mut online, first) = match resume {
        Some(r) => {
            r.params.validate()?;
            if r.params.layer_sizes != hyper.layer_sizes {
                return Err(Error::InvalidState(
                    "checkpoint layer sizes differ from hyper".into(),
                ));
            }
            // Keep the learner stream distinct from the one used before.
            rng = split(seed, 1 + r.episodes_done as u64);
            (r.params, r.episodes_done)
        }
        None => (MlpParams::init(&hyper.layer_sizes, &mut rng), 0),
    };
    let mut target = online.clone();
    let mut adam = AdamState::new(&online);
    let mut buffer = ReplayBuffer::new(hyper.replay_capacity);
    let mut log = TrainingLog::default();
    let mut total_steps = 0usize;
    let map = hyper.input_map;

    for episode in first..first + episodes {
        let mut env = KuramotoEnv::from_scenario(scenario, episode_seed(seed, episode))?;
        let mut obs = env.observation().to_array();
        let mut ret = 0.0;
        let mut r_sum = 0.0;
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        loop {
            let q = online.forward_unchecked(&map.apply(&obs));
            let action = select_action(&q, hyper.epsilon, &mut rng);
            let s = env.step(action)?;
            let next = s.next.to_array();
            buffer.push(Transition {
                state: obs,
                action,
                reward: s.reward,
                next_state: next,
                terminal: s.terminal,
            });
            ret += s.reward;
            r_sum += s.r_tot;
            obs = next;
            total_steps += 1;

            if buffer.len() >= hyper.batch_size {
                let batch = buffer.sample(hyper.batch_size, &mut rng);
                let next: Vec<[f64; 3]> = batch.iter().map(|t| map.apply(&t.next_state)).collect();
                let next_refs: Vec<&[f64]> = next.iter().map(|x| &x[..]).collect();
                let qn = target.forward_batch(&next_refs);
                let inputs: Vec<[f64; 3]> = batch.iter().map(|t| map.apply(&t.state)).collect();
                let targets: Vec<f64> = batch
                    .iter()
                    .zip(&qn)
                    .map(|(t, q)| td_target(t, q, hyper))
                    .collect();
                let samples: Vec<QTarget<'_>> = batch
                    .iter()
                    .zip(&targets)
                    .zip(&inputs)
                    .map(|((t, &y), x)| QTarget {
                        input: x,
                        action: t.action,
                        target: y,
                    })
                    .collect();
                let (grads, loss) = mlp_backward(&online, &samples)?;
                adam_step(&mut online, &grads, &mut adam, &hyper.adam)?;
                loss_sum += loss;
                updates += 1;
            }
            if total_steps % hyper.target_sync == 0 {
                if !online.is_finite() {
                    return Err(Error::InvalidState(format!(
                        "non-finite network parameters in episode {episode}"
                    )));
                }
                target = online.clone();
            }
            if s.terminal {
                break;
            }
        }
        let steps = env.steps() as f64;
        let row = EpisodeLog {
            episode,
            episode_return: ret,
            mean_r_tot: r_sum / steps,
            mean_loss: if updates > 0 {
                loss_sum / updates as f64
            } else {
                0.0
            },
            buffer_len: buffer.len(),
            final_omega_a: env.omega_a(),
        };
        log::debug!(
            "episode {} return {:.3} mean r_tot {:.4} loss {:.3e}",
            row.episode,
            row.episode_return,
            row.mean_r_tot,
            row.mean_loss
        );
        log.episodes.push(row);
    }
    if !online.is_finite() {
        return Err(Error::InvalidState(
            "non-finite network parameters after training".into(),
        ));
    }
    Ok((online, log))
}

/// Time-averaged `r_tot` of the greedy policy on each seeded episode.
pub fn evaluate_policy(
    params: &MlpParams,
    map: InputMap,
    scenario: &TrainingScenario,
    seeds: &[u64],
) -> Result<Vec<f64>> {
    let law = scenario.law()?;
    seeds
        .par_iter()
        .map(|&s| {
            let ca = CognitiveArchitecture::new(params.clone(), map, law)?;
            let mut agents: Vec<Box<dyn AvatarController>> = vec![Box::new(ca)];
            let traj = simulate(&scenario.episode_config(s), &mut agents)?;
            Ok(
                MetricsSeries::from_trajectory(&traj, scenario.episode_duration / 2.0)?
                    .averages
                    .r_tot,
            )
        })
        .collect()
}
