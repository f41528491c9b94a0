use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kuramoto::{FrequencyProcess, InitialPhases};
use crate::phase::OnlineConfig;

/// Trial conditions. The two replacing conditions put the avatar in the
/// graph slot of a simulated participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    Solo,
    P,
    #[serde(rename = "CA")]
    Ca,
    #[serde(rename = "NA")]
    Na,
    #[serde(rename = "CA-RC")]
    CaRc,
    #[serde(rename = "CA-RF")]
    CaRf,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Solo => "Solo",
            Condition::P => "P",
            Condition::Ca => "CA",
            Condition::Na => "NA",
            Condition::CaRc => "CA-RC",
            Condition::CaRf => "CA-RF",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::config("condition", format!("unknown condition {s:?}")))
    }

    pub fn has_avatar(self) -> bool {
        !matches!(self, Condition::Solo | Condition::P)
    }

    pub fn needs_checkpoint(self) -> bool {
        matches!(self, Condition::Ca | Condition::CaRc | Condition::CaRf)
    }

    /// Metric reported at the end of a trial: `r_net` when an added avatar
    /// is excluded from the group, `r_tot` otherwise.
    pub fn report_metric(self) -> &'static str {
        match self {
            Condition::Ca | Condition::Na => "r_net",
            _ => "r_tot",
        }
    }
}

/// One live trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionConfig {
    pub condition: Condition,
    pub n_simulated: usize,
    /// Expected client sampling rate (Hz); informs the signal-loss rule only.
    pub input_rate: f64,
    pub sim_rate: f64,
    pub frame_rate: f64,
    /// Seconds.
    pub trial_length: f64,
    pub coupling: f64,
    /// Frequencies of the simulated participants.
    pub freq_process: FrequencyProcess,
    /// Phases of the simulated participants.
    pub initial_phases: InitialPhases,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
    /// No input for this long (ms) marks the human signal as lost.
    pub signal_lost_ms: f64,
    /// Ball amplitude used before the human's amplitudes are known.
    pub default_amplitude: f64,
    pub estimator: OnlineConfig,
    /// Adds phases and order parameters to every frame.
    pub debug: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            condition: Condition::P,
            n_simulated: 4,
            input_rate: 40.0,
            sim_rate: 100.0,
            frame_rate: 40.0,
            trial_length: 30.0,
            coupling: 1.25,
            freq_process: FrequencyProcess::uniform(4, 4.0, 0.6),
            initial_phases: InitialPhases::Uniform {
                low: std::f64::consts::FRAC_PI_4,
                high: 3.0 * std::f64::consts::FRAC_PI_4,
            },
            checkpoint: None,
            seed: 0,
            signal_lost_ms: 250.0,
            default_amplitude: 0.8,
            estimator: OnlineConfig::default(),
            debug: false,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("input_rate", self.input_rate),
            ("sim_rate", self.sim_rate),
            ("frame_rate", self.frame_rate),
            ("trial_length", self.trial_length),
            ("signal_lost_ms", self.signal_lost_ms),
            ("default_amplitude", self.default_amplitude),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be > 0"));
            }
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::config("coupling", "must be >= 0"));
        }
        if self.condition != Condition::Solo {
            if self.freq_process.len() != self.n_simulated {
                return Err(Error::config(
                    "freq_process",
                    format!(
                        "{} entries for {} simulated participants",
                        self.freq_process.len(),
                        self.n_simulated
                    ),
                ));
            }
            self.freq_process.validate("freq_process")?;
        }
        if let InitialPhases::Explicit(v) = &self.initial_phases {
            if v.len() != self.n_simulated {
                return Err(Error::config(
                    "initial_phases",
                    "one angle per simulated participant",
                ));
            }
        }
        if matches!(self.condition, Condition::CaRc | Condition::CaRf) && self.n_simulated == 0 {
            return Err(Error::config(
                "n_simulated",
                "replacing conditions need a simulated participant",
            ));
        }
        if self.condition.needs_checkpoint() && self.checkpoint.is_none() {
            return Err(Error::config(
                "checkpoint",
                format!("required for {}", self.condition.as_str()),
            ));
        }
        Ok(())
    }
}
