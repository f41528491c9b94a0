use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::estimator::{Amplitudes, EstimatorState};
use crate::error::{Error, Result};
use crate::io::{create_file, fmt_f64};

/// Backward difference followed by a first-order low-pass with time
/// constant `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityFilter {
    tau: f64,
    p_prev: Option<f64>,
    v: Option<f64>,
}

impl VelocityFilter {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::invalid("velocity time constant must be >= 0"));
        }
        Ok(VelocityFilter {
            tau,
            p_prev: None,
            v: None,
        })
    }

    /// Velocity estimate after sample `p` taken `dt` after the previous one.
    /// The first sample yields 0.
    pub fn push(&mut self, p: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt must be > 0"));
        }
        let v = match self.p_prev {
            None => 0.0,
            Some(prev) => {
                let raw = velocity_from_positions(p, prev, dt)?;
                match self.v {
                    None => raw,
                    Some(v) => v + dt / (self.tau + dt) * (raw - v),
                }
            }
        };
        if self.p_prev.is_some() {
            self.v = Some(v);
        }
        self.p_prev = Some(p);
        Ok(v)
    }
}

/// Unfiltered backward difference.
pub fn velocity_from_positions(p: f64, p_prev: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be > 0"));
    }
    Ok((p - p_prev) / dt)
}

/// Subtracts a slow exponential running mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recenter {
    tau: f64,
    mean: f64,
}

impl Recenter {
    pub fn new(tau: f64, initial_mean: f64) -> Self {
        Recenter {
            tau,
            mean: initial_mean,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn push(&mut self, p: f64, dt: f64) -> f64 {
        self.mean += dt / (self.tau + dt) * (p - self.mean);
        p - self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineConfig {
    /// Seconds of input used to seed the amplitude registers.
    pub bootstrap: f64,
    pub velocity_tau: f64,
    /// Time constant of the offset removal; `None` disables it.
    pub recenter_tau: Option<f64>,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            bootstrap: 1.0,
            velocity_tau: 0.05,
            recenter_tau: Some(10.0),
        }
    }
}

/// One processed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    /// Re-centered position.
    pub p: f64,
    pub v: f64,
    pub theta: f64,
    pub amplitudes: Amplitudes,
}

/// Positions in, phases out: recentering, velocity estimation, bootstrap
/// and the estimator chained together for a live stream.
#[derive(Debug, Clone)]
pub struct OnlineEstimator {
    config: OnlineConfig,
    recenter: Option<Recenter>,
    velocity: VelocityFilter,
    warmup: Vec<(f64, f64)>,
    elapsed: f64,
    state: Option<EstimatorState>,
}

impl OnlineEstimator {
    pub fn new(config: OnlineConfig) -> Result<Self> {
        if !(config.bootstrap > 0.0) {
            return Err(Error::invalid(
                "bootstrap window must be > 0 without explicit amplitudes",
            ));
        }
        if let Some(t) = config.recenter_tau {
            if !(t > 0.0) {
                return Err(Error::invalid("recenter time constant must be > 0"));
            }
        }
        Ok(OnlineEstimator {
            config,
            recenter: config.recenter_tau.map(|t| Recenter::new(t, 0.0)),
            velocity: VelocityFilter::new(config.velocity_tau)?,
            warmup: Vec::new(),
            elapsed: 0.0,
            state: None,
        })
    }

    pub fn state(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }

    pub fn is_ready(&self) -> bool {
        self.state.is_some()
    }

    /// Feeds one position sample taken `dt` after the previous sample.
    /// Returns `None` while the bootstrap window is filling.
    pub fn push(&mut self, t: f64, raw_p: f64, dt: f64) -> Result<Option<EstimateRow>> {
        if !raw_p.is_finite() {
            return Ok(self.state.as_mut().map(|s| {
                let out = s.estimate_step(f64::NAN, f64::NAN);
                EstimateRow {
                    t,
                    p: s.p_prev,
                    v: s.v_prev,
                    theta: out.theta,
                    amplitudes: s.amplitudes,
                }
            }));
        }
        let p = match self.recenter.as_mut() {
            Some(r) => r.push(raw_p, dt),
            None => raw_p,
        };
        let v = self.velocity.push(p, dt)?;
        self.elapsed += dt;
        match self.state.as_mut() {
            None => {
                self.warmup.push((p, v));
                if self.elapsed + 1e-9 >= self.config.bootstrap {
                    let (ps, vs): (Vec<f64>, Vec<f64>) = self.warmup.drain(..).unzip();
                    self.state = Some(EstimatorState::bootstrap(&ps, &vs)?);
                }
                Ok(None)
            }
            Some(s) => {
                let out = s.estimate_step(p, v);
                Ok(Some(EstimateRow {
                    t,
                    p,
                    v,
                    theta: out.theta,
                    amplitudes: s.amplitudes,
                }))
            }
        }
    }
}

/// Reads a `(t, p)` CSV; a header line and `#` comments are skipped.
pub fn read_signal_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (a, b) = (parts.next(), parts.next());
        match (
            a.and_then(|s| s.parse::<f64>().ok()),
            b.and_then(|s| s.parse::<f64>().ok()),
        ) {
            (Some(t), Some(p)) => out.push((t, p)),
            _ if lineno == 0 => continue,
            _ => {
                return Err(Error::config(
                    format!("{}:{}", path.display(), lineno + 1),
                    "expected two numeric columns t,p",
                ))
            }
        }
    }
    Ok(out)
}

pub fn write_estimates_csv(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    let mut w = create_file(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "t,p,v,theta,A_ppos,A_pneg,A_vpos,A_vneg").map_err(io)?;
    for r in rows {
        let a = r.amplitudes.as_array();
        let fields = [r.t, r.p, r.v, r.theta, a[0], a[1], a[2], a[3]].map(fmt_f64);
        writeln!(w, "{}", fields.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}
