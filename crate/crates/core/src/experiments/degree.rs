use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::placeholder_group;
use super::scenario::{run_once, AvatarPlacement, GroupSpec};
use super::stats::{one_tailed_t_test, summarize, Summary, TTest};
use crate::agents::{AgentKind, AgentSpec};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv, write_json};
use crate::kuramoto::attach_avatar;
use crate::metrics::algebraic_connectivity;
use crate::rng::derive_seed;

/// Avatar node degree swept over every neighbor arrangement, adaptive agent
/// against the naive one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeConfig {
    pub group: GroupSpec,
    /// `1..=n_p` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<usize>>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    pub ca: AgentSpec,
    #[serde(default = "default_na")]
    pub na: AgentSpec,
}

fn default_reps() -> usize {
    5
}

fn default_na() -> AgentSpec {
    AgentSpec::new(AgentKind::Na)
}

impl DegreeConfig {
    pub fn with_agent(ca: AgentSpec) -> Self {
        DegreeConfig {
            group: placeholder_group(100.0),
            degrees: None,
            repetitions: default_reps(),
            seed: 0,
            ca,
            na: default_na(),
        }
    }

    pub fn degree_list(&self) -> Vec<usize> {
        self.degrees
            .clone()
            .unwrap_or_else(|| (1..=self.group.n_participants()).collect())
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRun {
    pub agent: AgentKind,
    pub degree: usize,
    pub arrangement: Vec<usize>,
    pub repetition: usize,
    pub seed: u64,
    pub r_net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub degree: usize,
    pub arrangements: usize,
    pub ca: Summary,
    pub na: Summary,
    /// H1: mean(CA) > mean(NA).
    pub t_test: TTest,
    /// λ2 with the avatar minus λ2 without, averaged over arrangements.
    pub delta_lambda2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeResult {
    pub lambda2_without: f64,
    pub summaries: Vec<DegreeSummary>,
    pub runs: Vec<DegreeRun>,
}

pub fn run_degree_study(cfg: &DegreeConfig, base: Option<&Path>) -> Result<DegreeResult> {
    cfg.group.validate()?;
    let n_p = cfg.group.n_participants();
    let degrees = cfg.degree_list();
    if let Some(&d) = degrees.iter().find(|&&d| d == 0 || d > n_p) {
        return Err(Error::invalid(format!("degree {d} outside 1..={n_p}")));
    }
    if cfg.repetitions < 2 {
        return Err(Error::config("repetitions", "the t-test needs at least 2"));
    }
    let ca = cfg.ca.prepare(cfg.group.dt, base)?;
    let na = cfg.na.prepare(cfg.group.dt, base)?;
    let lambda2_without = algebraic_connectivity(&cfg.group.graph)?;

    let mut jobs = Vec::new();
    for &d in &degrees {
        for (a, arr) in combinations(n_p, d).into_iter().enumerate() {
            for r in 0..cfg.repetitions {
                // CA and NA share the group draws of each case.
                let seed = derive_seed(cfg.seed, &[d as u64, a as u64, r as u64]);
                for (kind, spec, f) in
                    [(AgentKind::Ca, &cfg.ca, &ca), (AgentKind::Na, &cfg.na, &na)]
                {
                    jobs.push((kind, spec, f, d, arr.clone(), r, seed));
                }
            }
        }
    }
    let runs: Vec<DegreeRun> = jobs
        .into_par_iter()
        .map(|(kind, spec, f, d, arr, r, seed)| {
            let place = AvatarPlacement {
                agent: spec.clone(),
                neighbors: Some(arr.clone()),
                replace: None,
            };
            let out = run_once(&cfg.group, Some((&place, f)), seed)?;
            Ok(DegreeRun {
                agent: kind,
                degree: d,
                arrangement: arr,
                repetition: r,
                seed,
                r_net: out.summary.r_net,
            })
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::new();
    for &d in &degrees {
        let pick = |k: AgentKind| -> Vec<f64> {
            runs.iter()
                .filter(|r| r.degree == d && r.agent == k)
                .map(|r| r.r_net)
                .collect()
        };
        let arrangements = combinations(n_p, d);
        let mut dl = 0.0;
        for arr in &arrangements {
            dl += algebraic_connectivity(&attach_avatar(&cfg.group.graph, arr)?)? - lambda2_without;
        }
        let (a, b) = (pick(AgentKind::Ca), pick(AgentKind::Na));
        summaries.push(DegreeSummary {
            degree: d,
            arrangements: arrangements.len(),
            ca: summarize(&a),
            na: summarize(&b),
            t_test: one_tailed_t_test(&a, &b)?,
            delta_lambda2: dl / arrangements.len() as f64,
        });
    }
    Ok(DegreeResult {
        lambda2_without,
        summaries,
        runs,
    })
}

impl DegreeResult {
    /// `degree_runs.csv` (box-plot data), `degree_summary.csv` and
    /// `degree.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .map(|r| {
                let arr: Vec<String> = r.arrangement.iter().map(|i| i.to_string()).collect();
                vec![
                    r.agent.as_str().to_string(),
                    r.degree.to_string(),
                    arr.join(" "),
                    r.repetition.to_string(),
                    r.seed.to_string(),
                    fmt_f64(r.r_net),
                ]
            })
            .collect();
        write_csv(
            &dir.join("degree_runs.csv"),
            &[],
            &[
                "agent",
                "degree",
                "arrangement",
                "repetition",
                "seed",
                "r_net",
            ],
            &rows,
        )?;
        let rows: Vec<Vec<String>> = self
            .summaries
            .iter()
            .map(|s| {
                vec![
                    s.degree.to_string(),
                    s.arrangements.to_string(),
                    fmt_f64(s.ca.mean),
                    fmt_f64(s.ca.std),
                    fmt_f64(s.na.mean),
                    fmt_f64(s.na.std),
                    fmt_f64(s.t_test.statistic),
                    fmt_f64(s.t_test.p_value),
                    fmt_f64(s.delta_lambda2),
                ]
            })
            .collect();
        write_csv(
            &dir.join("degree_summary.csv"),
            &[],
            &[
                "degree",
                "arrangements",
                "ca_mean",
                "ca_std",
                "na_mean",
                "na_std",
                "t",
                "p_value",
                "delta_lambda2",
            ],
            &rows,
        )?;
        write_json(&dir.join("degree.json"), self)
    }
}
