use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Condition, SessionConfig};
use crate::agents::{AgentKind, AgentSpec, AvatarController, ControlContext};
use crate::error::{Error, Result};
use crate::experiments::{replaced_participant, ReplaceRule};
use crate::io::{create_file, fmt_f64};
use crate::kuramoto::{
    make_complete_graph, sim::initial_phases, wrap_angle, CouplingKernel, FrequencySampler,
};
use crate::metrics::{order_parameters, time_average};
use crate::phase::{phase_to_position, OnlineEstimator};
use crate::rng::{split, SimRng};

/// Positions beyond this are clamped before broadcast.
pub const GUARD_BAND: f64 = 1.2;
/// Window for the human phase-velocity estimate handed to the naive agent.
pub const VELOCITY_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    Human,
    Participant,
    Avatar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub id: String,
    pub kind: BallKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDebug {
    pub phases: BTreeMap<String, f64>,
    pub r_tot: f64,
    pub r_net: f64,
    pub signal_lost: bool,
}

/// What every client sees at one broadcast instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFrame {
    /// Session time, ms.
    pub t: f64,
    pub positions: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub debug: Option<FrameDebug>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub condition: Condition,
    pub steps: usize,
    /// Name of the headline metric, `r_net` or `r_tot`.
    pub metric: String,
    pub value: f64,
    pub r_net: f64,
    pub r_tot: f64,
    pub inputs_accepted: u64,
    pub inputs_dropped: u64,
    pub signal_lost_steps: usize,
}

/// Position samples and the phase estimate of the one human node.
struct HumanChannel {
    estimator: OnlineEstimator,
    queue: VecDeque<(f64, f64)>,
    last_t: Option<f64>,
    last_x: f64,
    theta: f64,
    /// (time, unwrapped phase) over the velocity window.
    history: VecDeque<(f64, f64)>,
    accepted: u64,
    dropped: u64,
}

impl HumanChannel {
    fn velocity(&self) -> Option<f64> {
        let (&(t0, u0), &(t1, u1)) = (self.history.front()?, self.history.back()?);
        (t1 > t0).then(|| (u1 - u0) / (t1 - t0))
    }

    fn record(&mut self, t: f64, theta: f64) {
        let unwrapped = match self.history.back() {
            Some(&(_, u)) => u + wrap_angle(theta - wrap_angle(u)),
            None => theta,
        };
        self.history.push_back((t, unwrapped));
        while self
            .history
            .front()
            .is_some_and(|&(t0, _)| t - t0 > VELOCITY_WINDOW)
        {
            self.history.pop_front();
        }
    }
}

/// The authoritative state of a live trial. Purely step-driven: the caller
/// supplies input samples and decides when to advance, so a session replays
/// identically from the same inputs.
pub struct SessionEngine {
    cfg: SessionConfig,
    balls: Vec<Ball>,
    /// Node index of each ball.
    nodes: Vec<usize>,
    kernel: CouplingKernel,
    frequencies: Vec<f64>,
    sampler: Option<FrequencySampler>,
    sim_participants: Vec<usize>,
    participant_ids: Vec<usize>,
    avatar_ids: Vec<usize>,
    agent: Option<Box<dyn AvatarController>>,
    avatar_neighbors: Vec<usize>,
    rng: SimRng,
    phases: Vec<f64>,
    human: HumanChannel,
    step: usize,
    total_steps: usize,
    frame_index: u64,
    trace: Vec<TraceRow>,
}

struct TraceRow {
    phases: Vec<f64>,
    omega_a: Option<f64>,
    r_tot: f64,
    r_net: f64,
    signal_lost: bool,
}

const HUMAN: usize = 0;

impl SessionEngine {
    pub fn new(cfg: SessionConfig, base: Option<&Path>) -> Result<Self> {
        cfg.validate()?;
        let mut rng = split(cfg.seed, 0);
        let solo = cfg.condition == Condition::Solo;
        let n_sim = if solo { 0 } else { cfg.n_simulated };

        // Node 0 is the human, 1..=n_sim the simulated participants.
        let mut freq = cfg.freq_process.clone();
        let mut sim_nodes: Vec<usize> = (1..=n_sim).collect();
        let mut avatar_ids = Vec::new();
        let mut graph = if n_sim == 0 {
            crate::kuramoto::GraphSpec::empty(1)
        } else {
            make_complete_graph(1 + n_sim)?
        };
        let mut sim_phases = if solo {
            vec![]
        } else {
            initial_phases(&cfg.initial_phases, n_sim, &mut split(cfg.seed, 1))
        };
        match cfg.condition {
            Condition::CaRc | Condition::CaRf => {
                let rule = if cfg.condition == Condition::CaRc {
                    ReplaceRule::Closest
                } else {
                    ReplaceRule::Farthest
                };
                let k = replaced_participant(&freq.means(), rule)?;
                let keep: Vec<usize> = (0..n_sim).filter(|&i| i != k).collect();
                freq = freq.select(&keep);
                avatar_ids.push(sim_nodes.remove(k));
            }
            Condition::Ca | Condition::Na => {
                let all: Vec<usize> = (0..=n_sim).collect();
                graph = crate::kuramoto::attach_avatar(&graph, &all)?;
                avatar_ids.push(1 + n_sim);
                let (arg, _) = crate::metrics::safe_arg(crate::metrics::mean_phasor(
                    sim_phases.iter().copied(),
                ));
                sim_phases.push(arg);
            }
            Condition::Solo | Condition::P => {}
        }
        let n = graph.n;
        let mut phases = vec![0.0; n];
        for i in 1..n {
            phases[i] = wrap_angle(sim_phases[i - 1]);
        }

        let agent = if cfg.condition.has_avatar() {
            let mut spec = match cfg.condition {
                Condition::Na => AgentSpec::new(AgentKind::Na),
                _ => AgentSpec::new(AgentKind::Ca),
            };
            spec.checkpoint = cfg.checkpoint.clone();
            let mut a = spec.build(1.0 / cfg.sim_rate, base)?;
            a.reset();
            Some(a)
        } else {
            None
        };
        let sampler = (!sim_nodes.is_empty()).then(|| freq.sampler(&mut rng));
        let mut frequencies = vec![0.0; n];
        if let (Some(a), Some(&id)) = (agent.as_ref(), avatar_ids.first()) {
            frequencies[id] = a.current_frequency();
        }

        let mut balls = vec![Ball {
            id: "human".into(),
            kind: BallKind::Human,
        }];
        let mut nodes = vec![HUMAN];
        for (j, &i) in sim_nodes.iter().enumerate() {
            balls.push(Ball {
                id: format!("p{}", j + 1),
                kind: BallKind::Participant,
            });
            nodes.push(i);
        }
        if let Some(&a) = avatar_ids.first() {
            balls.push(Ball {
                id: "avatar".into(),
                kind: BallKind::Avatar,
            });
            nodes.push(a);
        }
        let mut participant_ids = vec![HUMAN];
        participant_ids.extend(&sim_nodes);
        let kernel = CouplingKernel::new(&graph);
        let avatar_neighbors = avatar_ids
            .first()
            .map(|&a| kernel.neighbors(a).to_vec())
            .unwrap_or_default();
        let total_steps = (cfg.trial_length * cfg.sim_rate).round() as usize;
        let estimator = OnlineEstimator::new(cfg.estimator)?;
        Ok(SessionEngine {
            balls,
            nodes,
            kernel,
            frequencies,
            sampler,
            sim_participants: sim_nodes,
            participant_ids,
            avatar_ids,
            agent,
            avatar_neighbors,
            rng,
            phases,
            human: HumanChannel {
                estimator,
                queue: VecDeque::new(),
                last_t: None,
                last_x: 0.0,
                theta: 0.0,
                history: VecDeque::new(),
                accepted: 0,
                dropped: 0,
            },
            step: 0,
            total_steps,
            frame_index: 0,
            trace: Vec::with_capacity(total_steps),
            cfg,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.cfg.sim_rate
    }

    /// Session time in ms of the next step.
    pub fn time_ms(&self) -> f64 {
        self.step as f64 * 1000.0 / self.cfg.sim_rate
    }

    pub fn finished(&self) -> bool {
        self.step >= self.total_steps
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn inputs_dropped(&self) -> u64 {
        self.human.dropped
    }

    /// Queues a position sample taken at session time `t_ms`. Samples that
    /// are not newer than the previous one, or not finite, are dropped.
    pub fn ingest(&mut self, t_ms: f64, x: f64) -> bool {
        let newest = self.human.queue.back().map(|s| s.0).or(self.human.last_t);
        if !t_ms.is_finite() || !x.is_finite() || newest.is_some_and(|t| t_ms <= t) {
            self.human.dropped += 1;
            return false;
        }
        self.human.queue.push_back((t_ms, x));
        self.human.accepted += 1;
        true
    }

    fn signal_lost(&self, now_ms: f64) -> bool {
        self.human
            .last_t
            .map_or(true, |t| now_ms - t > self.cfg.signal_lost_ms)
    }

    fn human_amplitudes(&self) -> (f64, f64) {
        self.human
            .estimator
            .state()
            .map(|s| (s.amplitudes.p_pos, s.amplitudes.p_neg))
            .unwrap_or((self.cfg.default_amplitude, self.cfg.default_amplitude))
    }

    /// Advances one simulation tick. Returns a frame when a broadcast
    /// instant falls in this tick.
    pub fn step(&mut self) -> Result<Option<SessionFrame>> {
        if self.finished() {
            return Ok(None);
        }
        let now = self.time_ms();
        // Zero-order hold: every sample up to now updates the estimate, the
        // latest one stays in force until the next arrives.
        while let Some(&(t, x)) = self.human.queue.front() {
            if t > now {
                break;
            }
            self.human.queue.pop_front();
            let dt = match self.human.last_t {
                Some(prev) => (t - prev) / 1000.0,
                None => 1.0 / self.cfg.input_rate,
            };
            self.human.last_t = Some(t);
            self.human.last_x = x;
            if let Some(row) = self.human.estimator.push(t / 1000.0, x, dt)? {
                self.human.theta = row.theta;
                self.human.record(t / 1000.0, row.theta);
            }
        }
        let lost = self.signal_lost(now);
        let dt = self.dt();
        self.phases[HUMAN] = self.human.theta;

        let n = self.phases.len();
        if let Some(s) = self.sampler.as_mut() {
            let w = s.draw(&mut self.rng);
            for (&i, &wi) in self.sim_participants.iter().zip(w) {
                self.frequencies[i] = wi;
            }
        }
        let mut coupling = vec![0.0; n];
        self.kernel
            .coupling_terms(&self.phases, self.cfg.coupling, &mut coupling);
        let mut velocities: Vec<f64> = (0..n).map(|i| self.frequencies[i] + coupling[i]).collect();
        velocities[HUMAN] = self.human.velocity().unwrap_or(0.0);

        if let (Some(agent), Some(&a)) = (self.agent.as_mut(), self.avatar_ids.first()) {
            // With the human signal gone the avatar keeps its frequency.
            if !lost {
                let ctx = ControlContext {
                    step: self.step as u64,
                    dt,
                    phases: &self.phases,
                    velocities: &velocities,
                    participant_ids: &self.participant_ids,
                    avatar: a,
                    neighbors: &self.avatar_neighbors,
                };
                self.frequencies[a] = agent.decide(&ctx).omega;
            }
        }

        let (r_tot, r_net) =
            order_parameters(&self.phases, &self.participant_ids, &self.avatar_ids)?;
        let frame = self
            .frame_due()
            .then(|| self.frame(now, r_tot, r_net, lost))
            .transpose()?;
        self.trace.push(TraceRow {
            phases: self.phases.clone(),
            omega_a: self.avatar_ids.first().map(|&a| self.frequencies[a]),
            r_tot,
            r_net,
            signal_lost: lost,
        });

        let human = self.phases[HUMAN];
        CouplingKernel::advance(&mut self.phases, &self.frequencies, &coupling, dt);
        // The human is measured, not integrated.
        self.phases[HUMAN] = human;
        self.step += 1;
        Ok(frame)
    }

    fn frame_due(&self) -> bool {
        let per = self.cfg.frame_rate / self.cfg.sim_rate;
        let next = (self.frame_index as f64 / per).ceil() as usize;
        next <= self.step
    }

    fn frame(&mut self, now: f64, r_tot: f64, r_net: f64, lost: bool) -> Result<SessionFrame> {
        self.frame_index += 1;
        self.render(now, r_tot, r_net, lost)
    }

    /// Frame of the current state, for callers that broadcast on their own
    /// clock rather than on the frames [`step`](Self::step) returns.
    pub fn snapshot(&self) -> Result<SessionFrame> {
        let now = self.time_ms();
        let (r_tot, r_net) =
            order_parameters(&self.phases, &self.participant_ids, &self.avatar_ids)?;
        self.render(now, r_tot, r_net, self.signal_lost(now))
    }

    fn render(&self, now: f64, r_tot: f64, r_net: f64, lost: bool) -> Result<SessionFrame> {
        let amps = [self.human_amplitudes()];
        let mut positions = BTreeMap::new();
        for (ball, &node) in self.balls.iter().zip(&self.nodes) {
            let x = match ball.kind {
                BallKind::Human => self.human.last_x,
                _ => phase_to_position(self.phases[node], &amps)?,
            };
            positions.insert(ball.id.clone(), x.clamp(-GUARD_BAND, GUARD_BAND));
        }
        let debug = self.cfg.debug.then(|| FrameDebug {
            phases: self
                .balls
                .iter()
                .zip(&self.nodes)
                .map(|(b, &i)| (b.id.clone(), self.phases[i]))
                .collect(),
            r_tot,
            r_net,
            signal_lost: lost,
        });
        Ok(SessionFrame {
            t: now,
            positions,
            debug,
        })
    }

    pub fn report(&self) -> Result<TrialReport> {
        if self.trace.len() < 2 {
            return Err(Error::InvalidState("trial has fewer than two steps".into()));
        }
        let r_tot: Vec<f64> = self.trace.iter().map(|r| r.r_tot).collect();
        let r_net: Vec<f64> = self.trace.iter().map(|r| r.r_net).collect();
        let (t, n) = (
            time_average(&r_tot, self.dt(), 0.0)?,
            time_average(&r_net, self.dt(), 0.0)?,
        );
        let metric = self.cfg.condition.report_metric();
        Ok(TrialReport {
            condition: self.cfg.condition,
            steps: self.trace.len(),
            metric: metric.to_string(),
            value: if metric == "r_net" { n } else { t },
            r_net: n,
            r_tot: t,
            inputs_accepted: self.human.accepted,
            inputs_dropped: self.human.dropped,
            signal_lost_steps: self.trace.iter().filter(|r| r.signal_lost).count(),
        })
    }

    /// Per-step order parameters of the trace so far.
    pub fn r_tot_series(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.r_tot).collect()
    }

    /// `k,t,<ball phases…>,omega_a,r_tot,r_net,signal_lost`.
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut w = create_file(path)?;
        let io = |e| Error::io(path, e);
        let names: Vec<String> = self
            .balls
            .iter()
            .map(|b| format!("theta_{}", b.id))
            .collect();
        writeln!(w, "# condition: {}", self.cfg.condition.as_str()).map_err(io)?;
        writeln!(w, "k,t,{},omega_a,r_tot,r_net,signal_lost", names.join(",")).map_err(io)?;
        for (k, row) in self.trace.iter().enumerate() {
            let phases: Vec<String> = self.nodes.iter().map(|&i| fmt_f64(row.phases[i])).collect();
            writeln!(
                w,
                "{k},{},{},{},{},{},{}",
                fmt_f64(k as f64 * self.dt()),
                phases.join(","),
                row.omega_a.map(fmt_f64).unwrap_or_default(),
                fmt_f64(row.r_tot),
                fmt_f64(row.r_net),
                u8::from(row.signal_lost)
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
