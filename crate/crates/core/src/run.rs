//! Top-level jobs behind the command line: training, single simulations and
//! theorem checks, each with a JSON config and a fixed set of output files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::AgentKind;
use crate::error::{Error, Result};
use crate::experiments::{
    placeholder_group, prepare_agent, run_once, AvatarPlacement, GroupSpec, RunSummary,
};
use crate::io::{config_hash, fmt_f64, read_json, write_csv, write_json};
use crate::rl::{
    evaluate_policy, evaluation_seeds, load_checkpoint, save_checkpoint, train, Checkpoint,
    DqnHyper, Resume, TrainingMeta, TrainingScenario,
};
use crate::theory::{verify_theorem1, TheoremReport, VerifyOptions};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub scenario: TrainingScenario,
    pub hyper: DqnHyper,
    pub episodes: usize,
    pub seed: u64,
    /// Greedy episodes scored after training.
    pub evaluation_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            scenario: TrainingScenario::default(),
            hyper: DqnHyper::default(),
            episodes: 500,
            seed: 2024,
            evaluation_episodes: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.hyper.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub episodes_total: usize,
    /// Mean greedy ⟨r_tot⟩ over the evaluation episodes.
    pub evaluation_r_tot: f64,
}

/// Trains, continuing from `resume` when given, and writes
/// `checkpoint.json`, `training_log.csv` and `evaluation.json` into `out`.
pub fn run_train(cfg: &TrainConfig, resume: Option<&Path>, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    ensure_dir(out)?;
    let resume = resume
        .map(|p| -> Result<Resume> {
            let ck = load_checkpoint(p)?;
            Ok(Resume {
                params: ck.params,
                episodes_done: ck.training_meta.episodes,
            })
        })
        .transpose()?;
    let done = resume.as_ref().map_or(0, |r| r.episodes_done);
    let (params, log) = train(&cfg.scenario, &cfg.hyper, cfg.episodes, cfg.seed, resume)?;
    let ck = Checkpoint {
        params,
        hyper: cfg.hyper.clone(),
        training_meta: TrainingMeta {
            seed: cfg.seed,
            episodes: done + cfg.episodes,
            scenario: Some(cfg.scenario.clone()),
        },
    };
    let path = out.join(CHECKPOINT_FILE);
    save_checkpoint(&path, &ck)?;
    log.write_csv(&out.join("training_log.csv"))?;

    let seeds = evaluation_seeds(cfg.seed, cfg.evaluation_episodes.max(1));
    let scores = evaluate_policy(&ck.params, cfg.hyper.input_map, &cfg.scenario, &seeds)?;
    let evaluation_r_tot = scores.iter().sum::<f64>() / scores.len() as f64;
    let outcome = TrainOutcome {
        checkpoint: path,
        episodes_total: ck.training_meta.episodes,
        evaluation_r_tot,
    };
    write_json(&out.join("evaluation.json"), &outcome)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub group: GroupSpec,
    /// No avatar when absent.
    pub avatar: Option<AvatarPlacement>,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            group: placeholder_group(100.0),
            avatar: None,
            seed: 0,
        }
    }
}

/// One run of `cfg`; writes `trajectory.csv`, `metrics.csv`,
/// `summary.json` and, with an avatar, `avatar.csv`.
pub fn run_simulate(cfg: &SimulateConfig, base: Option<&Path>, out: &Path) -> Result<RunSummary> {
    cfg.group.validate()?;
    let factory = prepare_agent(cfg.avatar.as_ref(), cfg.group.dt, base)?;
    ensure_dir(out)?;
    let avatar = cfg.avatar.as_ref().zip(factory.as_ref());
    let run = run_once(&cfg.group, avatar, cfg.seed)?;
    let hash = config_hash(cfg);
    run.trajectory.write_csv(&out.join("trajectory.csv"))?;
    run.metrics.write_csv(&out.join("metrics.csv"), &hash)?;
    if let Some(&a) = run.trajectory.avatar_ids.first() {
        let rows: Vec<Vec<String>> = run
            .trajectory
            .phases
            .iter()
            .zip(&run.trajectory.frequencies)
            .enumerate()
            .map(|(k, (th, om))| {
                let action = run
                    .trajectory
                    .actions
                    .get(k)
                    .and_then(|row| row.first().copied().flatten())
                    .map(|i| i.to_string())
                    .unwrap_or_default();
                vec![
                    k.to_string(),
                    fmt_f64(k as f64 * run.trajectory.dt),
                    fmt_f64(th[a]),
                    fmt_f64(om[a]),
                    action,
                ]
            })
            .collect();
        let kind = cfg.avatar.as_ref().map_or(AgentKind::Ca, |p| p.agent.kind);
        write_csv(
            &out.join("avatar.csv"),
            &[
                ("agent".into(), kind.as_str().into()),
                ("node".into(), a.to_string()),
                ("config_hash".into(), hash),
            ],
            &["k", "t", "theta_a", "omega_a", "action"],
            &rows,
        )?;
    }
    write_json(&out.join("summary.json"), &run.summary)?;
    Ok(run.summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub coupling: f64,
    pub options: VerifyOptions,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            omega1: 4.3,
            omega2: 3.7,
            coupling: 1.25,
            options: VerifyOptions::default(),
        }
    }
}

/// Writes `theorem.csv` and `theorem.json`.
pub fn run_verify(cfg: &VerifyConfig, out: &Path) -> Result<TheoremReport> {
    let report = verify_theorem1(cfg.omega1, cfg.omega2, cfg.coupling, &cfg.options)?;
    ensure_dir(out)?;
    report.write_csv(&out.join("theorem.csv"))?;
    report.write_json(&out.join("theorem.json"))?;
    Ok(report)
}

/// Reads a config file; the directory it lives in is returned for resolving
/// relative paths inside it.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, PathBuf)> {
    let cfg = read_json(path)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}
