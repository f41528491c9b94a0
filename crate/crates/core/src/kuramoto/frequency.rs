use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Lower bound applied to every generated natural frequency (rad/s).
pub const FREQUENCY_FLOOR: f64 = 0.1;

/// How participant natural frequencies evolve.
///
/// Vectors are indexed by participant position (the order of
/// `SimConfig::participant_ids`), not by node index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FrequencyProcess {
    /// Fixed frequencies.
    Constant { omegas: Vec<f64> },
    /// Drawn once per simulation from `U[mean - half_width, mean + half_width]`.
    UniformOnce {
        mean: Vec<f64>,
        half_width: Vec<f64>,
    },
    /// Redrawn every step from `N(mean, std^2)`.
    GaussianPerStep { mean: Vec<f64>, std: Vec<f64> },
}

impl FrequencyProcess {
    /// Every participant uniform on `[center - delta, center + delta]`.
    pub fn uniform(n: usize, center: f64, delta: f64) -> Self {
        FrequencyProcess::UniformOnce {
            mean: vec![center; n],
            half_width: vec![delta; n],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FrequencyProcess::Constant { omegas } => omegas.len(),
            FrequencyProcess::UniformOnce { mean, .. } => mean.len(),
            FrequencyProcess::GaussianPerStep { mean, .. } => mean.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-participant mean frequency.
    pub fn means(&self) -> Vec<f64> {
        match self {
            FrequencyProcess::Constant { omegas } => omegas.clone(),
            FrequencyProcess::UniformOnce { mean, .. } => mean.clone(),
            FrequencyProcess::GaussianPerStep { mean, .. } => mean.clone(),
        }
    }

    /// Keeps only the listed participant positions.
    pub fn select(&self, keep: &[usize]) -> Self {
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        match self {
            FrequencyProcess::Constant { omegas } => FrequencyProcess::Constant {
                omegas: pick(omegas),
            },
            FrequencyProcess::UniformOnce { mean, half_width } => FrequencyProcess::UniformOnce {
                mean: pick(mean),
                half_width: pick(half_width),
            },
            FrequencyProcess::GaussianPerStep { mean, std } => FrequencyProcess::GaussianPerStep {
                mean: pick(mean),
                std: pick(std),
            },
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        let check_len = |a: usize, b: usize| {
            if a != b {
                Err(Error::config(
                    field,
                    format!("parameter vectors differ in length ({a} vs {b})"),
                ))
            } else {
                Ok(())
            }
        };
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            FrequencyProcess::Constant { omegas } => {
                if !omegas.iter().all(|&w| w.is_finite() && w > 0.0) {
                    return Err(Error::config(
                        field,
                        "constant frequencies must be positive",
                    ));
                }
            }
            FrequencyProcess::UniformOnce { mean, half_width } => {
                check_len(mean.len(), half_width.len())?;
                if !finite(mean) || !half_width.iter().all(|&h| h.is_finite() && h >= 0.0) {
                    return Err(Error::config(field, "half widths must be finite and >= 0"));
                }
            }
            FrequencyProcess::GaussianPerStep { mean, std } => {
                check_len(mean.len(), std.len())?;
                if !finite(mean) || !std.iter().all(|&s| s.is_finite() && s >= 0.0) {
                    return Err(Error::config(
                        field,
                        "standard deviations must be finite and >= 0",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn sampler(&self, rng: &mut SimRng) -> FrequencySampler {
        let current = match self {
            FrequencyProcess::Constant { omegas } => omegas.clone(),
            FrequencyProcess::UniformOnce { mean, half_width } => mean
                .iter()
                .zip(half_width)
                .map(|(&m, &h)| {
                    floor(if h > 0.0 {
                        rng.random_range(m - h..=m + h)
                    } else {
                        m
                    })
                })
                .collect(),
            FrequencyProcess::GaussianPerStep { mean, .. } => {
                mean.iter().map(|&m| floor(m)).collect()
            }
        };
        FrequencySampler {
            process: self.clone(),
            current,
        }
    }
}

#[inline]
fn floor(w: f64) -> f64 {
    w.max(FREQUENCY_FLOOR)
}

/// Realized frequency process for one simulation.
#[derive(Debug, Clone)]
pub struct FrequencySampler {
    process: FrequencyProcess,
    current: Vec<f64>,
}

impl FrequencySampler {
    /// Frequencies for the next step.
    pub fn draw(&mut self, rng: &mut SimRng) -> &[f64] {
        if let FrequencyProcess::GaussianPerStep { mean, std } = &self.process {
            for ((w, &m), &s) in self.current.iter_mut().zip(mean).zip(std) {
                *w = if s > 0.0 {
                    // Normal::new only fails for non-finite or negative std, excluded by validate.
                    floor(Normal::new(m, s).expect("validated std").sample(rng))
                } else {
                    floor(m)
                };
            }
        }
        &self.current
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }
}
