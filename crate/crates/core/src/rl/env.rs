use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::agents::{
    action_delta, observe, AvatarFrequencyLaw, RlObservation, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN,
};
use crate::error::{Error, Result};
use crate::kuramoto::sim::initial_phases;
use crate::kuramoto::{
    make_complete_graph, CouplingKernel, FrequencyProcess, FrequencySampler, InitialPhases,
    SimConfig,
};
use crate::metrics::mean_phasor;
use crate::rng::{seeded, SimRng};

/// Episode generator for training: `n_participants` oscillators plus one
/// avatar on a complete graph, frequencies drawn once per episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingScenario {
    pub n_participants: usize,
    pub coupling: f64,
    pub dt: f64,
    pub episode_duration: f64,
    pub omega_center: f64,
    pub omega_half_width: f64,
    pub theta0_low: f64,
    pub theta0_high: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_a0: f64,
}

impl Default for TrainingScenario {
    fn default() -> Self {
        TrainingScenario {
            n_participants: 2,
            coupling: 1.25,
            dt: 0.01,
            episode_duration: 5.0,
            omega_center: 4.0,
            omega_half_width: 0.6,
            theta0_low: PI / 4.0,
            theta0_high: 3.0 * PI / 4.0,
            omega_min: DEFAULT_OMEGA_MIN,
            omega_max: DEFAULT_OMEGA_MAX,
            omega_a0: 4.0,
        }
    }
}

impl TrainingScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_participants == 0 {
            return Err(Error::config("scenario.n_participants", "must be >= 1"));
        }
        if !(self.omega_half_width >= 0.0 && self.omega_center - self.omega_half_width > 0.0) {
            return Err(Error::config(
                "scenario.omega_half_width",
                "frequencies must stay positive",
            ));
        }
        self.law()?;
        // The remaining fields are checked through the generated SimConfig.
        self.episode_config(0).validate()
    }

    pub fn law(&self) -> Result<AvatarFrequencyLaw> {
        AvatarFrequencyLaw::new(self.omega_min, self.omega_max, Some(self.omega_a0))
            .map_err(|e| Error::config("scenario.omega_min", e.to_string()))
    }

    pub fn steps(&self) -> usize {
        (self.episode_duration / self.dt).round() as usize
    }

    /// Simulation equivalent of one episode; nodes `0..n_p` are participants,
    /// node `n_p` the avatar.
    pub fn episode_config(&self, seed: u64) -> SimConfig {
        let n_p = self.n_participants;
        SimConfig {
            dt: self.dt,
            duration: self.episode_duration,
            coupling: self.coupling,
            graph: make_complete_graph(n_p + 1)
                .unwrap_or_else(|_| crate::kuramoto::GraphSpec::empty(n_p + 1)),
            freq_process: FrequencyProcess::uniform(n_p, self.omega_center, self.omega_half_width),
            initial_phases: InitialPhases::Uniform {
                low: self.theta0_low,
                high: self.theta0_high,
            },
            rng_seed: seed,
            participant_ids: (0..n_p).collect(),
            avatar_ids: vec![n_p],
        }
    }
}

/// Step-by-step view of a single-avatar simulation for the learner. The
/// random draws and update order match [`crate::kuramoto::simulate`].
#[derive(Debug, Clone)]
pub struct KuramotoEnv {
    config: SimConfig,
    kernel: CouplingKernel,
    initial_law: AvatarFrequencyLaw,
    law: AvatarFrequencyLaw,
    avatar: usize,
    rng: SimRng,
    sampler: FrequencySampler,
    phases: Vec<f64>,
    frequencies: Vec<f64>,
    coupling: Vec<f64>,
    step: usize,
    steps: usize,
}

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub next: RlObservation,
    pub reward: f64,
    pub r_tot: f64,
    pub terminal: bool,
}

impl KuramotoEnv {
    pub fn new(config: SimConfig, law: AvatarFrequencyLaw) -> Result<Self> {
        config.validate()?;
        if config.avatar_ids.len() != 1 {
            return Err(Error::invalid(
                "training environment needs exactly one avatar",
            ));
        }
        let avatar = config.avatar_ids[0];
        let kernel = CouplingKernel::new(&config.graph);
        let mut rng = seeded(config.rng_seed);
        let phases = initial_phases(&config.initial_phases, config.n(), &mut rng);
        let sampler = config.freq_process.sampler(&mut rng);
        let n = config.n();
        let steps = config.steps();
        let mut env = KuramotoEnv {
            kernel,
            initial_law: law,
            law,
            avatar,
            rng,
            sampler,
            phases,
            frequencies: vec![0.0; n],
            coupling: vec![0.0; n],
            step: 0,
            steps,
            config,
        };
        env.frequencies[avatar] = law.omega;
        env.prepare();
        Ok(env)
    }

    pub fn from_scenario(scenario: &TrainingScenario, seed: u64) -> Result<Self> {
        KuramotoEnv::new(scenario.episode_config(seed), scenario.law()?)
    }

    /// Draws this step's participant frequencies and coupling terms.
    fn prepare(&mut self) {
        let w = self.sampler.draw(&mut self.rng);
        for (&i, &wi) in self.config.participant_ids.iter().zip(w) {
            self.frequencies[i] = wi;
        }
        self.kernel
            .coupling_terms(&self.phases, self.config.coupling, &mut self.coupling);
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn omega_a(&self) -> f64 {
        self.law.omega
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn initial_law(&self) -> AvatarFrequencyLaw {
        self.initial_law
    }

    pub fn observation(&self) -> RlObservation {
        observe(
            &self.phases,
            &self.config.participant_ids,
            self.phases[self.avatar],
            self.law.omega,
        )
        .expect("validated participant set")
    }

    /// Applies action `index`, advances one Euler step and returns the
    /// post-step observation and reward `r_tot(k+1)²`.
    pub fn step(&mut self, index: usize) -> Result<StepResult> {
        if self.step >= self.steps {
            return Err(Error::InvalidState("episode already finished".into()));
        }
        if index >= crate::agents::NUM_ACTIONS {
            return Err(Error::invalid(format!("action {index} out of range")));
        }
        self.frequencies[self.avatar] = self.law.apply(action_delta(index));
        CouplingKernel::advance(
            &mut self.phases,
            &self.frequencies,
            &self.coupling,
            self.config.dt,
        );
        self.step += 1;
        let r_tot = mean_phasor(self.phases.iter().copied()).norm();
        let terminal = self.step == self.steps;
        if !terminal {
            self.prepare();
        }
        Ok(StepResult {
            next: self.observation(),
            reward: r_tot * r_tot,
            r_tot,
            terminal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AvatarController, FixedAgent};
    use crate::kuramoto::simulate;

    #[test]
    fn midpoint_actions_match_fixed_agent_simulation() {
        let sc = TrainingScenario::default();
        let mut env = KuramotoEnv::from_scenario(&sc, 77).unwrap();
        let mut agents: Vec<Box<dyn AvatarController>> =
            vec![Box::new(FixedAgent::new(4.0).unwrap())];
        let traj = simulate(&sc.episode_config(77), &mut agents).unwrap();
        assert_eq!(env.phases(), &traj.phases[0][..]);
        for k in 0..sc.steps() {
            let s = env.step(5).unwrap();
            assert_eq!(env.phases(), &traj.phases[k + 1][..]);
            assert_eq!(s.terminal, k + 1 == sc.steps());
            assert!((0.0..=1.0).contains(&s.reward));
        }
        assert!(matches!(env.step(5), Err(Error::InvalidState(_))));
    }

    #[test]
    fn episode_has_500_steps_and_saturates() {
        let sc = TrainingScenario::default();
        let mut env = KuramotoEnv::from_scenario(&sc, 1).unwrap();
        assert_eq!(env.steps(), 500);
        for _ in 0..20 {
            env.step(10).unwrap();
        }
        assert_eq!(env.omega_a(), 6.0);
        assert!(env.step(11).is_err());
    }

    #[test]
    fn initial_conditions_in_range() {
        let sc = TrainingScenario::default();
        for seed in 0..20 {
            let env = KuramotoEnv::from_scenario(&sc, seed).unwrap();
            for &p in env.phases() {
                assert!(p >= sc.theta0_low && p < sc.theta0_high);
            }
            assert_eq!(env.omega_a(), 4.0);
        }
    }
}
