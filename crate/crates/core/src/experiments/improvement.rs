use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{prepare_agent, run_once, AvatarPlacement, GroupSpec, RunSummary};
use super::stats::{summarize, Summary};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv, write_json};
use crate::rng::derive_seed;

/// Baselines below this are reported without a percentage.
pub const MIN_BASELINE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledGroup {
    pub label: String,
    pub group: GroupSpec,
}

/// Paired runs of each group with and without the avatar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImprovementConfig {
    pub groups: Vec<LabeledGroup>,
    pub avatar: AvatarPlacement,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_reps() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub r_net: f64,
    pub r_tot: f64,
    pub rho_net: f64,
    pub rho_tot: f64,
}

impl MetricSet {
    fn as_array(self) -> [f64; 4] {
        [self.r_net, self.r_tot, self.rho_net, self.rho_tot]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub label: String,
    pub n_participants: usize,
    pub without: MetricSet,
    pub with: MetricSet,
    /// `100·(with − without)/without` per metric; `None` when the baseline
    /// is below [`MIN_BASELINE`].
    pub increase_pct: [Option<f64>; 4],
    pub r_net_with: Summary,
}

impl ImprovementRow {
    pub fn all_positive(&self) -> bool {
        self.increase_pct.iter().all(|p| p.is_some_and(|v| v > 0.0))
    }
}

pub fn percent_increase(without: f64, with: f64) -> Option<f64> {
    (without.abs() >= MIN_BASELINE).then(|| 100.0 * (with - without) / without)
}

fn averages(runs: &[RunSummary]) -> Result<MetricSet> {
    let mean = |f: &dyn Fn(&RunSummary) -> Option<f64>| -> Result<f64> {
        let v: Vec<f64> = runs.iter().map(f).collect::<Option<_>>().ok_or_else(|| {
            Error::config(
                "group.duration",
                "runs must be longer than the synchronization window",
            )
        })?;
        Ok(summarize(&v).mean)
    };
    Ok(MetricSet {
        r_net: mean(&|r| Some(r.r_net))?,
        r_tot: mean(&|r| Some(r.r_tot))?,
        rho_net: mean(&|r| r.rho_net)?,
        rho_tot: mean(&|r| r.rho_tot)?,
    })
}

pub fn improvement_report(
    cfg: &ImprovementConfig,
    base: Option<&Path>,
) -> Result<Vec<ImprovementRow>> {
    if cfg.groups.is_empty() || cfg.repetitions == 0 {
        return Err(Error::config(
            "groups",
            "need at least one group and one repetition",
        ));
    }
    let mut out = Vec::new();
    for (g, lg) in cfg.groups.iter().enumerate() {
        lg.group.validate()?;
        let factory = prepare_agent(Some(&cfg.avatar), lg.group.dt, base)?.expect("avatar given");
        let jobs: Vec<(u64, bool)> = (0..cfg.repetitions)
            .flat_map(|r| {
                let seed = derive_seed(cfg.seed, &[g as u64, r as u64]);
                [(seed, false), (seed, true)]
            })
            .collect();
        let runs: Vec<RunSummary> = jobs
            .par_iter()
            .map(|&(seed, with)| {
                let av = with.then_some((&cfg.avatar, &factory));
                Ok(run_once(&lg.group, av, seed)?.summary)
            })
            .collect::<Result<_>>()?;
        let without: Vec<RunSummary> = runs.iter().step_by(2).copied().collect();
        let with: Vec<RunSummary> = runs.iter().skip(1).step_by(2).copied().collect();
        let (a, b) = (averages(&without)?, averages(&with)?);
        let (wa, wb) = (a.as_array(), b.as_array());
        out.push(ImprovementRow {
            label: lg.label.clone(),
            n_participants: lg.group.n_participants(),
            without: a,
            with: b,
            increase_pct: std::array::from_fn(|i| percent_increase(wa[i], wb[i])),
            r_net_with: summarize(&with.iter().map(|r| r.r_net).collect::<Vec<_>>()),
        });
    }
    Ok(out)
}

/// `improvement.csv` with the columns of a % increase table and
/// `improvement.json` with the raw averages.
pub fn write_improvement(rows: &[ImprovementRow], dir: &Path) -> Result<()> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.label.clone(), r.n_participants.to_string()];
            v.extend(
                r.increase_pct
                    .iter()
                    .map(|p| p.map(fmt_f64).unwrap_or_default()),
            );
            v
        })
        .collect();
    write_csv(
        &dir.join("improvement.csv"),
        &[],
        &[
            "group",
            "n_p",
            "r_net_pct",
            "r_tot_pct",
            "rho_net_pct",
            "rho_tot_pct",
        ],
        &cells,
    )?;
    write_json(&dir.join("improvement.json"), &rows)
}
