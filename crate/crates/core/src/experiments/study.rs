use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bell::{run_bell_curve, BellConfig, BellResult};
use super::degree::{run_degree_study, DegreeConfig, DegreeResult};
use super::heatmap::{run_heatmap, HeatmapConfig, HeatmapResult};
use super::improvement::{
    improvement_report, write_improvement, ImprovementConfig, ImprovementRow, LabeledGroup,
};
use super::placeholder_group;
use super::scenario::AvatarPlacement;
use crate::agents::AgentSpec;
use crate::error::Result;
use std::f64::consts::FRAC_PI_2;

use crate::kuramoto::{make_ring_graph, FrequencyProcess, InitialPhases};

/// Study selection as it appears in a config file, tagged by `study`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "kebab-case")]
pub enum StudyConfig {
    Heatmap(HeatmapConfig),
    Bell(BellConfig),
    Degree(DegreeConfig),
    Improvement(ImprovementConfig),
}

impl StudyConfig {
    /// Desk-scale defaults for `kind`, pointing at `checkpoint` for the
    /// adaptive agent.
    pub fn default_for(kind: &str, checkpoint: &Path) -> Option<Self> {
        let ca = AgentSpec::ca(checkpoint);
        Some(match kind {
            "heatmap" => StudyConfig::Heatmap(HeatmapConfig {
                avatar: Some(AvatarPlacement::connected_to_all(ca)),
                ..HeatmapConfig::default()
            }),
            "bell" => StudyConfig::Bell(BellConfig::with_agent(ca)),
            "degree" => StudyConfig::Degree(DegreeConfig::with_agent(ca)),
            "improvement" => {
                let seven = placeholder_group(300.0);
                let mut five = placeholder_group(300.0);
                five.graph = make_ring_graph(5).expect("ring of five");
                five.initial_phases = InitialPhases::Explicit(vec![FRAC_PI_2; 5]);
                if let FrequencyProcess::GaussianPerStep { mean, std } = &mut five.freq_process {
                    *mean = vec![3.7, 3.95, 4.1, 4.3, 4.45];
                    std.truncate(5);
                }
                StudyConfig::Improvement(ImprovementConfig {
                    groups: vec![
                        LabeledGroup {
                            label: "placeholder-7".into(),
                            group: seven,
                        },
                        LabeledGroup {
                            label: "placeholder-5".into(),
                            group: five,
                        },
                    ],
                    avatar: AvatarPlacement::connected_to_all(ca),
                    repetitions: 5,
                    seed: 0,
                })
            }
            _ => return None,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StudyConfig::Heatmap(_) => "heatmap",
            StudyConfig::Bell(_) => "bell",
            StudyConfig::Degree(_) => "degree",
            StudyConfig::Improvement(_) => "improvement",
        }
    }

    /// Replaces the study's base seed.
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            StudyConfig::Heatmap(c) => c.seed = seed,
            StudyConfig::Bell(c) => c.seed = seed,
            StudyConfig::Degree(c) => c.seed = seed,
            StudyConfig::Improvement(c) => c.seed = seed,
        }
    }

    /// Points every adaptive agent at `checkpoint`.
    pub fn set_checkpoint(&mut self, checkpoint: &Path) {
        let set = |a: &mut AgentSpec| {
            if a.kind == crate::agents::AgentKind::Ca {
                a.checkpoint = Some(checkpoint.to_path_buf());
            }
        };
        match self {
            StudyConfig::Heatmap(c) => {
                if let Some(p) = c.avatar.as_mut() {
                    set(&mut p.agent)
                }
            }
            StudyConfig::Bell(c) => set(&mut c.agent),
            StudyConfig::Degree(c) => set(&mut c.ca),
            StudyConfig::Improvement(c) => set(&mut c.avatar.agent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "study", rename_all = "kebab-case")]
pub enum StudyOutcome {
    Heatmap(HeatmapResult),
    Bell(BellResult),
    Degree(DegreeResult),
    Improvement { rows: Vec<ImprovementRow> },
}

/// Runs the study and writes its files into `out`. `base` resolves relative
/// checkpoint paths.
pub fn run_study(cfg: &StudyConfig, base: Option<&Path>, out: &Path) -> Result<StudyOutcome> {
    Ok(match cfg {
        StudyConfig::Heatmap(c) => {
            let r = run_heatmap(c, base)?;
            r.write(out)?;
            StudyOutcome::Heatmap(r)
        }
        StudyConfig::Bell(c) => {
            let r = run_bell_curve(c, base)?;
            r.write(out)?;
            StudyOutcome::Bell(r)
        }
        StudyConfig::Degree(c) => {
            let r = run_degree_study(c, base)?;
            r.write(out)?;
            StudyOutcome::Degree(r)
        }
        StudyConfig::Improvement(c) => {
            let rows = improvement_report(c, base)?;
            write_improvement(&rows, out)?;
            StudyOutcome::Improvement { rows }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for kind in ["heatmap", "bell", "degree", "improvement"] {
            let cfg = StudyConfig::default_for(kind, Path::new("ca.json")).unwrap();
            assert_eq!(cfg.kind(), kind);
            let text = serde_json::to_string(&cfg).unwrap();
            let back: StudyConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
        assert!(StudyConfig::default_for("nope", Path::new("x")).is_none());
    }

    #[test]
    fn unknown_field_rejected() {
        let r: std::result::Result<StudyConfig, _> =
            serde_json::from_str(r#"{"study":"heatmap","couplings":[1.0],"colour":1}"#);
        assert!(r.is_err());
    }
}
