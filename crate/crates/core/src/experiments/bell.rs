use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::placeholder_group;
use super::scenario::{run_once, AvatarPlacement, GroupSpec};
use super::stats::{summarize, Summary};
use crate::agents::AgentSpec;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv, write_json};
use crate::rng::derive_seed;

/// Fixed-frequency sweep against an adaptive avatar, both linked to every
/// participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellConfig {
    pub group: GroupSpec,
    /// Fixed-agent frequencies; 11 points at group mean ± 1 rad/s when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    pub agent: AgentSpec,
}

fn default_reps() -> usize {
    5
}

impl BellConfig {
    pub fn with_agent(agent: AgentSpec) -> Self {
        BellConfig {
            group: placeholder_group(300.0),
            omegas: None,
            repetitions: default_reps(),
            seed: 0,
            agent,
        }
    }

    pub fn group_mean(&self) -> f64 {
        let m = self.group.freq_process.means();
        m.iter().sum::<f64>() / m.len() as f64
    }

    pub fn omega_grid(&self) -> Vec<f64> {
        self.omegas.clone().unwrap_or_else(|| {
            let mean = self.group_mean();
            (0..11).map(|k| mean - 1.0 + 0.2 * k as f64).collect()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellPoint {
    pub omega: f64,
    pub r_net: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub group_mean: f64,
    pub curve: Vec<BellPoint>,
    pub best_fixed: BellPoint,
    pub agent_r_net: Summary,
    /// Per-run time-averaged avatar frequency.
    pub agent_mean_omega_a: Summary,
    /// ω_a(k) of the first run.
    pub omega_trace: Vec<f64>,
    pub dt: f64,
}

impl BellResult {
    /// Agent mean lies within one standard deviation of the best fixed
    /// frequency.
    pub fn agent_in_top_band(&self) -> bool {
        self.agent_r_net.mean >= self.best_fixed.r_net.mean - self.best_fixed.r_net.std
    }
}

pub fn run_bell_curve(cfg: &BellConfig, base: Option<&Path>) -> Result<BellResult> {
    cfg.group.validate()?;
    if cfg.repetitions == 0 {
        return Err(Error::config("repetitions", "must be >= 1"));
    }
    let grid = cfg.omega_grid();
    if grid.is_empty() || grid.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::config(
            "omegas",
            "need at least one positive frequency",
        ));
    }
    let seeds: Vec<u64> = (0..cfg.repetitions)
        .map(|r| derive_seed(cfg.seed, &[r as u64]))
        .collect();

    let agent = AvatarPlacement::connected_to_all(cfg.agent.clone());
    let factory = agent.agent.prepare(cfg.group.dt, base)?;
    let mut fixed = Vec::new();
    for &w in &grid {
        let p = AvatarPlacement::connected_to_all(AgentSpec::fixed(w));
        let f = p.agent.prepare(cfg.group.dt, base)?;
        fixed.push((p, f));
    }

    // Job `g * reps + r`; index `grid.len()` is the adaptive agent.
    let jobs: Vec<(usize, usize)> = (0..=grid.len())
        .flat_map(|g| (0..cfg.repetitions).map(move |r| (g, r)))
        .collect();
    let runs: Vec<(f64, Option<f64>, Option<Vec<f64>>)> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let (p, f) = if g < grid.len() {
                (&fixed[g].0, &fixed[g].1)
            } else {
                (&agent, &factory)
            };
            let out = run_once(&cfg.group, Some((p, f)), seeds[r])?;
            let trace = (g == grid.len() && r == 0).then(|| {
                let a = out.trajectory.avatar_ids[0];
                out.trajectory.frequencies.iter().map(|f| f[a]).collect()
            });
            Ok((out.summary.r_net, out.summary.mean_omega_a, trace))
        })
        .collect::<Result<_>>()?;

    let reps = cfg.repetitions;
    let curve: Vec<BellPoint> = grid
        .iter()
        .enumerate()
        .map(|(g, &omega)| BellPoint {
            omega,
            r_net: summarize(
                &runs[g * reps..(g + 1) * reps]
                    .iter()
                    .map(|r| r.0)
                    .collect::<Vec<_>>(),
            ),
        })
        .collect();
    let best_fixed = *curve
        .iter()
        .reduce(|a, b| if b.r_net.mean > a.r_net.mean { b } else { a })
        .expect("nonempty grid");
    let agent_runs = &runs[grid.len() * reps..];
    Ok(BellResult {
        group_mean: cfg.group_mean(),
        curve,
        best_fixed,
        agent_r_net: summarize(&agent_runs.iter().map(|r| r.0).collect::<Vec<_>>()),
        agent_mean_omega_a: summarize(&agent_runs.iter().filter_map(|r| r.1).collect::<Vec<_>>()),
        omega_trace: agent_runs[0].2.clone().unwrap_or_default(),
        dt: cfg.group.dt,
    })
}

impl BellResult {
    /// `bell.csv` (one row per fixed ω plus an `agent` row),
    /// `bell_omega_trace.dat` and `bell.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut rows: Vec<Vec<String>> = self
            .curve
            .iter()
            .map(|p| {
                vec![
                    "fixed".to_string(),
                    fmt_f64(p.omega),
                    fmt_f64(p.r_net.mean),
                    fmt_f64(p.r_net.std),
                ]
            })
            .collect();
        rows.push(vec![
            "agent".to_string(),
            fmt_f64(self.agent_mean_omega_a.mean),
            fmt_f64(self.agent_r_net.mean),
            fmt_f64(self.agent_r_net.std),
        ]);
        write_csv(
            &dir.join("bell.csv"),
            &[],
            &["series", "omega", "r_net_mean", "r_net_std"],
            &rows,
        )?;
        let trace: Vec<Vec<String>> = self
            .omega_trace
            .iter()
            .enumerate()
            .map(|(k, w)| vec![fmt_f64(k as f64 * self.dt), fmt_f64(*w)])
            .collect();
        write_csv(
            &dir.join("bell_omega_trace.dat"),
            &[],
            &["t", "omega_a"],
            &trace,
        )?;
        write_json(&dir.join("bell.json"), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_agent_at_the_peak_is_in_band() {
        let mut cfg = BellConfig::with_agent(AgentSpec::fixed(4.15));
        cfg.group.duration = 20.0;
        cfg.repetitions = 2;
        cfg.omegas = Some(vec![3.15, 4.15, 7.15]);
        let res = run_bell_curve(&cfg, None).unwrap();
        assert_eq!(res.curve.len(), 3);
        assert!((res.group_mean - 4.15).abs() < 1e-12);
        // the agent is the same as the middle fixed point
        assert_eq!(res.agent_r_net, res.curve[1].r_net);
        assert!(res.agent_in_top_band());
        assert!(res.curve[2].r_net.mean < res.curve[1].r_net.mean);
        assert_eq!(res.omega_trace.len(), 2001);
        assert!((res.agent_mean_omega_a.mean - 4.15).abs() < 1e-12);
    }
}
