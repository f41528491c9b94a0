use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::{wrap_angle, CouplingKernel};
use super::frequency::FrequencyProcess;
use super::graph::GraphSpec;
use crate::agents::{AvatarController, ControlContext};
use crate::error::{Error, Result};
use crate::io::{create_file, fmt_f64};
use crate::rng::{seeded, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPhases {
    /// One angle per node.
    Explicit(Vec<f64>),
    /// Every node drawn independently from `U[low, high]`.
    Uniform { low: f64, high: f64 },
}

/// A complete, serializable description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub coupling: f64,
    pub graph: GraphSpec,
    /// Frequencies of the nodes in `participant_ids`, in that order.
    pub freq_process: FrequencyProcess,
    pub initial_phases: InitialPhases,
    pub rng_seed: u64,
    pub participant_ids: Vec<usize>,
    #[serde(default)]
    pub avatar_ids: Vec<usize>,
}

impl SimConfig {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be > 0"));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::config("duration", "must be >= dt"));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::config("coupling", "must be >= 0"));
        }
        self.graph.validate()?;
        let n = self.graph.n;
        let mut seen = vec![false; n];
        for (field, ids) in [
            ("participant_ids", &self.participant_ids),
            ("avatar_ids", &self.avatar_ids),
        ] {
            for &i in ids {
                if i >= n {
                    return Err(Error::config(field, format!("node {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::config(field, format!("node {i} listed twice")));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::config(
                "participant_ids",
                "participant and avatar ids must partition the nodes",
            ));
        }
        if self.participant_ids.is_empty() {
            return Err(Error::config("participant_ids", "must not be empty"));
        }
        self.freq_process.validate("freq_process")?;
        if self.freq_process.len() != self.participant_ids.len() {
            return Err(Error::config(
                "freq_process",
                format!(
                    "has {} entries for {} participants",
                    self.freq_process.len(),
                    self.participant_ids.len()
                ),
            ));
        }
        match &self.initial_phases {
            InitialPhases::Explicit(v) if v.len() != n => {
                return Err(Error::config(
                    "initial_phases",
                    format!("{} angles for {n} nodes", v.len()),
                ))
            }
            InitialPhases::Uniform { low, high } if !(low <= high) => {
                return Err(Error::config("initial_phases", "low must be <= high"))
            }
            _ => {}
        }
        Ok(())
    }
}

pub(crate) fn initial_phases(spec: &InitialPhases, n: usize, rng: &mut SimRng) -> Vec<f64> {
    match spec {
        InitialPhases::Explicit(v) => v.iter().map(|&x| wrap_angle(x)).collect(),
        InitialPhases::Uniform { low, high } => (0..n)
            .map(|_| {
                if high > low {
                    wrap_angle(rng.random_range(*low..*high))
                } else {
                    wrap_angle(*low)
                }
            })
            .collect(),
    }
}

/// Recorded simulation output. Row `k` holds θ(k) and the frequencies used
/// to integrate from `k` to `k + 1`; the final row repeats the last
/// frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub participant_ids: Vec<usize>,
    pub avatar_ids: Vec<usize>,
    pub phases: Vec<Vec<f64>>,
    pub frequencies: Vec<Vec<f64>>,
    /// Discrete action index chosen by each avatar at each step, when the
    /// controller has one.
    pub actions: Vec<Vec<Option<usize>>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.phases.len().saturating_sub(1)
    }

    pub fn n(&self) -> usize {
        self.phases.first().map_or(0, Vec::len)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.phases.len()).map(move |k| k as f64 * self.dt)
    }

    /// Frequency series of one node.
    pub fn node_frequencies(&self, node: usize) -> Vec<f64> {
        self.frequencies.iter().map(|row| row[node]).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = create_file(path)?;
        let n = self.n();
        let mut header = String::from("k,t");
        for i in 0..n {
            header.push_str(&format!(",theta_{i}"));
        }
        for i in 0..n {
            header.push_str(&format!(",omega_{i}"));
        }
        let io = |e| Error::io(path, e);
        writeln!(w, "{header}").map_err(io)?;
        for (k, (th, om)) in self.phases.iter().zip(&self.frequencies).enumerate() {
            let mut line = format!("{k},{}", fmt_f64(k as f64 * self.dt));
            for x in th.iter().chain(om) {
                line.push(',');
                line.push_str(&fmt_f64(*x));
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Runs the network for `config.steps()` steps. `agents[j]` drives node
/// `config.avatar_ids[j]`.
pub fn simulate(
    config: &SimConfig,
    agents: &mut [Box<dyn AvatarController>],
) -> Result<Trajectory> {
    config.validate()?;
    if agents.len() != config.avatar_ids.len() {
        return Err(Error::invalid(format!(
            "{} avatar ids but {} controllers bound",
            config.avatar_ids.len(),
            agents.len()
        )));
    }
    let n = config.n();
    let steps = config.steps();
    let mut rng = seeded(config.rng_seed);
    let mut phases = initial_phases(&config.initial_phases, n, &mut rng);
    let mut sampler = config.freq_process.sampler(&mut rng);
    let kernel = CouplingKernel::new(&config.graph);
    let neighbors: Vec<Vec<usize>> = config
        .avatar_ids
        .iter()
        .map(|&a| kernel.neighbors(a).to_vec())
        .collect();

    for a in agents.iter_mut() {
        a.reset();
    }
    let mut frequencies = vec![0.0; n];
    for (j, &a) in config.avatar_ids.iter().enumerate() {
        frequencies[a] = agents[j].current_frequency();
    }

    let mut out = Trajectory {
        dt: config.dt,
        participant_ids: config.participant_ids.clone(),
        avatar_ids: config.avatar_ids.clone(),
        phases: Vec::with_capacity(steps + 1),
        frequencies: Vec::with_capacity(steps + 1),
        actions: Vec::with_capacity(steps),
    };
    let mut coupling = vec![0.0; n];
    let mut velocities = vec![0.0; n];
    for k in 0..steps {
        let w = sampler.draw(&mut rng);
        for (&i, &wi) in config.participant_ids.iter().zip(w) {
            frequencies[i] = wi;
        }
        kernel.coupling_terms(&phases, config.coupling, &mut coupling);
        for i in 0..n {
            velocities[i] = frequencies[i] + coupling[i];
        }
        let mut acts = Vec::with_capacity(agents.len());
        for (j, &a) in config.avatar_ids.iter().enumerate() {
            let ctx = ControlContext {
                step: k as u64,
                dt: config.dt,
                phases: &phases,
                velocities: &velocities,
                participant_ids: &config.participant_ids,
                avatar: a,
                neighbors: &neighbors[j],
            };
            let d = agents[j].decide(&ctx);
            frequencies[a] = d.omega;
            acts.push(d.action);
        }
        out.phases.push(phases.clone());
        out.frequencies.push(frequencies.clone());
        out.actions.push(acts);
        CouplingKernel::advance(&mut phases, &frequencies, &coupling, config.dt);
    }
    out.phases.push(phases);
    out.frequencies.push(frequencies);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::FixedAgent;
    use crate::kuramoto::graph::{make_complete_graph, make_ring_graph};
    use crate::metrics::order_parameters;
    use std::f64::consts::PI;

    fn two_node(c: f64, duration: f64) -> SimConfig {
        SimConfig {
            dt: 0.01,
            duration,
            coupling: c,
            graph: make_complete_graph(2).unwrap(),
            freq_process: FrequencyProcess::Constant {
                omegas: vec![4.0, 4.0],
            },
            initial_phases: InitialPhases::Explicit(vec![0.0, 1.0]),
            rng_seed: 1,
            participant_ids: vec![0, 1],
            avatar_ids: vec![],
        }
    }

    #[test]
    fn identical_frequencies_lock() {
        let t = simulate(&two_node(10.0, 5.0), &mut []).unwrap();
        assert_eq!(t.steps(), 500);
        let (r_tot, _) = order_parameters(t.phases.last().unwrap(), &[0, 1], &[]).unwrap();
        assert!((1.0 - r_tot) < 1e-3);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut cfg = two_node(1.0, 2.0);
        cfg.freq_process = FrequencyProcess::GaussianPerStep {
            mean: vec![4.0, 3.5],
            std: vec![0.3, 0.3],
        };
        cfg.initial_phases = InitialPhases::Uniform {
            low: 0.0,
            high: 3.0,
        };
        let a = simulate(&cfg, &mut []).unwrap();
        let b = simulate(&cfg, &mut []).unwrap();
        assert_eq!(a, b);
        cfg.rng_seed = 2;
        assert_ne!(a, simulate(&cfg, &mut []).unwrap());
    }

    #[test]
    fn training_scenario_phase_locks_with_equal_frequencies() {
        let mut cfg = SimConfig {
            dt: 0.01,
            duration: 30.0,
            coupling: 1.25,
            graph: make_complete_graph(3).unwrap(),
            freq_process: FrequencyProcess::Constant {
                omegas: vec![4.0, 4.0],
            },
            initial_phases: InitialPhases::Uniform {
                low: PI / 4.0,
                high: 3.0 * PI / 4.0,
            },
            rng_seed: 9,
            participant_ids: vec![0, 1],
            avatar_ids: vec![2],
        };
        let mut agents: Vec<Box<dyn AvatarController>> =
            vec![Box::new(FixedAgent::new(4.0).unwrap())];
        let t = simulate(&cfg, &mut agents).unwrap();
        // Pairwise phase differences stop changing.
        let last = &t.phases[t.steps()];
        let prev = &t.phases[t.steps() - 1];
        for i in 0..3 {
            for j in 0..3 {
                let d_now = wrap_angle(last[i] - last[j]);
                let d_prev = wrap_angle(prev[i] - prev[j]);
                assert!((wrap_angle(d_now - d_prev) / cfg.dt).abs() < 1e-4);
            }
        }
        cfg.avatar_ids.clear();
        assert!(simulate(&cfg, &mut []).is_err());
    }

    #[test]
    fn unbound_avatar_is_rejected() {
        let cfg = SimConfig {
            dt: 0.01,
            duration: 1.0,
            coupling: 1.0,
            graph: make_ring_graph(3).unwrap(),
            freq_process: FrequencyProcess::uniform(2, 4.0, 0.5),
            initial_phases: InitialPhases::Uniform {
                low: 0.0,
                high: 1.0,
            },
            rng_seed: 0,
            participant_ids: vec![0, 1],
            avatar_ids: vec![2],
        };
        assert!(matches!(
            simulate(&cfg, &mut []),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn partition_is_validated() {
        let mut cfg = two_node(1.0, 1.0);
        cfg.participant_ids = vec![0];
        cfg.freq_process = FrequencyProcess::Constant { omegas: vec![4.0] };
        assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
        cfg.participant_ids = vec![0, 0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = two_node(1.0, 1.0);
        let s = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
    }
}
