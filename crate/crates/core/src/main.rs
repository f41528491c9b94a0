use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use synchrony::agents::{AgentKind, AgentSpec};
use synchrony::experiments::{run_study, AvatarPlacement, ReplaceRule, StudyConfig, StudyOutcome};
use synchrony::live::{self, Condition, ServerConfig};
use synchrony::run::{
    load_config, run_simulate, run_train, run_verify, SimulateConfig, TrainConfig, VerifyConfig,
    CHECKPOINT_FILE,
};
use synchrony::{Error, Result};

/// Kuramoto group simulator with a learned synchronizing avatar.
#[derive(Parser)]
#[command(name = "synchrony", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train the avatar's Q-network.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
        /// Continue from this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        emit_default_config: bool,
    },
    /// Run one group, optionally with an avatar.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// P, CA, NA, CA-RC or CA-RF; replaces the config's avatar.
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        emit_default_config: bool,
    },
    /// Heatmap, bell, degree or improvement study.
    Study {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Print the default config of a study kind.
        #[arg(long, value_name = "KIND", num_args = 0..=1, default_missing_value = "heatmap")]
        emit_default_config: Option<String>,
    },
    /// Brute-force check of the two-oscillator optimum.
    VerifyTheorem {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        emit_default_config: bool,
    },
    /// Live-session server; runs until interrupted.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for trial traces.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        emit_default_config: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYNCHRONY_LOG", "info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn config_or_default<T: DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<(T, Option<PathBuf>)> {
    match path {
        Some(p) => load_config(p).map(|(c, base)| (c, Some(base))),
        None => Ok((T::default(), None)),
    }
}

/// Paths given on the command line are relative to the working directory.
fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train {
            common,
            episodes,
            checkpoint,
            emit_default_config,
        } => {
            if emit_default_config {
                return emit(&TrainConfig::default());
            }
            let (mut cfg, _) = config_or_default::<TrainConfig>(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            let res = run_train(&cfg, checkpoint.as_deref(), &common.out)?;
            log::info!("checkpoint written to {}", res.checkpoint.display());
            println!(
                "episodes: {}\nfinal evaluation <r_tot>: {:.6}",
                res.episodes_total, res.evaluation_r_tot
            );
            Ok(())
        }
        Command::Simulate {
            common,
            condition,
            checkpoint,
            emit_default_config,
        } => {
            if emit_default_config {
                return emit(&SimulateConfig::default());
            }
            let (mut cfg, base) = config_or_default::<SimulateConfig>(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let checkpoint = checkpoint.as_deref().map(absolute).transpose()?;
            if let Some(c) = condition {
                cfg.avatar =
                    placement_for(Condition::parse(&c)?, cfg.avatar.take(), checkpoint.clone())?;
            }
            if let (Some(ck), Some(av)) = (checkpoint, cfg.avatar.as_mut()) {
                if av.agent.kind == AgentKind::Ca {
                    av.agent.checkpoint = Some(ck);
                }
            }
            let s = run_simulate(&cfg, base.as_deref(), &common.out)?;
            println!("<r_net>: {:.6}\n<r_tot>: {:.6}", s.r_net, s.r_tot);
            Ok(())
        }
        Command::Study {
            common,
            checkpoint,
            emit_default_config,
        } => {
            let default_ck = Path::new(CHECKPOINT_FILE);
            if let Some(kind) = emit_default_config {
                let cfg = StudyConfig::default_for(&kind, default_ck).ok_or_else(|| {
                    Error::invalid(format!(
                        "unknown study {kind:?}; expected heatmap, bell, degree or improvement"
                    ))
                })?;
                return emit(&cfg);
            }
            let path = common
                .config
                .ok_or_else(|| Error::config("config", "study needs --config"))?;
            let (mut cfg, base) = load_config::<StudyConfig>(&path)?;
            if let Some(s) = common.seed {
                cfg.set_seed(s);
            }
            if let Some(ck) = checkpoint {
                cfg.set_checkpoint(&absolute(&ck)?);
            }
            std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
            let outcome = run_study(&cfg, Some(&base), &common.out)?;
            print_study(&outcome);
            Ok(())
        }
        Command::VerifyTheorem {
            config,
            out,
            emit_default_config,
        } => {
            if emit_default_config {
                return emit(&VerifyConfig::default());
            }
            let (cfg, _) = config_or_default::<VerifyConfig>(config.as_deref())?;
            let r = run_verify(&cfg, &out)?;
            println!(
                "chi: {}\nnu: {}\nhypothesis holds: {}\npredicted omega_a: {}",
                r.chi, r.nu, r.hypothesis_holds, r.predicted_omega_a
            );
            match r.argmax_omega_a {
                Some(a) => println!(
                    "argmax omega_a: {a}\nmax r_net: {}\nwithin grid resolution: {}",
                    r.max_r_net.unwrap_or(f64::NAN),
                    r.argmax_within_resolution
                ),
                None => println!("no locked grid point"),
            }
            Ok(())
        }
        Command::Serve {
            config,
            out,
            condition,
            checkpoint,
            seed,
            emit_default_config,
        } => {
            if emit_default_config {
                return emit(&ServerConfig::default());
            }
            let (mut cfg, base) = config_or_default::<ServerConfig>(config.as_deref())?;
            if cfg.base_dir.is_none() {
                cfg.base_dir = base;
            }
            if let Some(c) = condition {
                cfg.session.condition = Condition::parse(&c)?;
            }
            if let Some(ck) = checkpoint {
                cfg.session.checkpoint = Some(absolute(&ck)?);
            }
            if let Some(s) = seed {
                cfg.session.seed = s;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            cfg.session.validate()?;
            serve(cfg)
        }
    }
}

fn placement_for(
    condition: Condition,
    previous: Option<AvatarPlacement>,
    checkpoint: Option<PathBuf>,
) -> Result<Option<AvatarPlacement>> {
    let kind = match condition {
        Condition::P => return Ok(None),
        Condition::Solo => {
            return Err(Error::invalid(
                "Solo has no coupled group to simulate; use P with coupling 0",
            ))
        }
        Condition::Na => AgentKind::Na,
        _ => AgentKind::Ca,
    };
    let mut agent = match previous {
        Some(p) if p.agent.kind == kind => p.agent,
        _ => AgentSpec::new(kind),
    };
    if kind == AgentKind::Ca {
        agent.checkpoint = checkpoint.or(agent.checkpoint);
    }
    let replace = match condition {
        Condition::CaRc => Some(ReplaceRule::Closest),
        Condition::CaRf => Some(ReplaceRule::Farthest),
        _ => None,
    };
    Ok(Some(AvatarPlacement {
        agent,
        neighbors: None,
        replace,
    }))
}

fn print_study(outcome: &StudyOutcome) {
    match outcome {
        StudyOutcome::Heatmap(r) => println!(
            "cells with <r_net> >= {}: without {} / with {} (of {})",
            r.threshold,
            r.count_without,
            r.count_with.map_or("-".into(), |c| c.to_string()),
            r.cells.len()
        ),
        StudyOutcome::Bell(r) => {
            println!(
                "best fixed: omega {} <r_net> {:.6}",
                r.best_fixed.omega, r.best_fixed.r_net.mean
            );
            println!(
                "agent: <r_net> {:.6} mean omega_a {:.4} (group mean {:.4}), in band: {}",
                r.agent_r_net.mean,
                r.agent_mean_omega_a.mean,
                r.group_mean,
                r.agent_in_top_band()
            );
        }
        StudyOutcome::Degree(r) => {
            for s in &r.summaries {
                println!(
                    "d_a {}: {} arrangements, CA {:.6} NA {:.6}, p {:.3e}",
                    s.degree, s.arrangements, s.ca.mean, s.na.mean, s.t_test.p_value
                );
            }
        }
        StudyOutcome::Improvement { rows } => {
            for row in rows {
                let pct: Vec<String> = row
                    .increase_pct
                    .iter()
                    .map(|p| p.map_or("n/a".into(), |v| format!("{v:+.4}%")))
                    .collect();
                println!("{}: {}", row.label, pct.join(" "));
            }
        }
    }
}

fn serve(cfg: ServerConfig) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("tokio runtime", e))?;
    rt.block_on(async move {
        let server = live::start(cfg).await?;
        log::info!("listening on http://{}", server.addr);
        println!("listening on http://{}", server.addr);
        shutdown_signal().await;
        log::info!("shutting down");
        server.stop().await
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = ctrl_c => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => ctrl_c.await,
        }
    }
    #[cfg(not(unix))]
    ctrl_c.await;
}
