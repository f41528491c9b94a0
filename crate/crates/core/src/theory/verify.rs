use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lock::{chi_nu, solve_phase_lock};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv, write_json};
use crate::kuramoto::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    pub omega_a_min: f64,
    pub omega_a_max: f64,
    pub omega_a_step: f64,
    pub dt: f64,
    /// Give up on locking after this many seconds.
    pub t_max: f64,
    /// Locked once every pairwise phase-difference rate stays below this
    /// (rad/s) for `hold` seconds.
    pub rate_tol: f64,
    pub hold: f64,
    /// Offset added to θ1 at the start so the run has to settle.
    pub perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            omega_a_min: 3.0,
            omega_a_max: 5.0,
            omega_a_step: 0.05,
            dt: 0.01,
            t_max: 300.0,
            rate_tol: 1e-4,
            hold: 1.0,
            perturbation: 0.05,
        }
    }
}

impl VerifyOptions {
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.omega_a_max - self.omega_a_min) / self.omega_a_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| self.omega_a_min + k as f64 * self.omega_a_step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub omega_a: f64,
    pub locked: bool,
    pub theta12: Option<f64>,
    pub r_net: Option<f64>,
    pub lock_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub omega1: f64,
    pub omega2: f64,
    pub c: f64,
    pub chi: f64,
    pub nu: f64,
    pub hypothesis_holds: bool,
    pub predicted_omega_a: f64,
    pub argmax_omega_a: Option<f64>,
    pub max_r_net: Option<f64>,
    pub grid_step: f64,
    pub argmax_within_resolution: bool,
    pub rows: Vec<TheoremRow>,
}

impl TheoremReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.omega_a),
                    if r.locked { "1".into() } else { "0".into() },
                    opt(r.theta12),
                    opt(r.r_net),
                ]
            })
            .collect();
        write_csv(path, &[], &["omega_a", "locked", "theta12", "r_net"], &rows)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Euler run of the three-node network at fixed `ω_a` until the phase
/// differences stop moving.
fn settle(omega: [f64; 3], c: f64, start: [f64; 3], opt: &VerifyOptions) -> TheoremRow {
    let mut th = start;
    let steps = (opt.t_max / opt.dt).round() as usize;
    let need = (opt.hold / opt.dt).round() as usize;
    let mut calm = 0usize;
    for k in 0..steps {
        let mut vel = [0.0; 3];
        for i in 0..3 {
            vel[i] = omega[i]
                + c * (0..3)
                    .filter(|&j| j != i)
                    .map(|j| (th[j] - th[i]).sin())
                    .sum::<f64>();
        }
        let rate = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| (vel[i] - vel[j]).abs())
            .fold(0.0, f64::max);
        calm = if rate < opt.rate_tol { calm + 1 } else { 0 };
        if calm >= need {
            let x = wrap_angle(th[0] - th[1]);
            return TheoremRow {
                omega_a: omega[2],
                locked: true,
                theta12: Some(x),
                r_net: Some((x / 2.0).cos().abs()),
                lock_time: Some(k as f64 * opt.dt),
            };
        }
        for i in 0..3 {
            th[i] += opt.dt * vel[i];
        }
    }
    TheoremRow {
        omega_a: omega[2],
        locked: false,
        theta12: None,
        r_net: None,
        lock_time: None,
    }
}

/// Simulates every `ω_a` of the grid from near its best stable lock and
/// reports where the locked `r_net` peaks.
pub fn verify_theorem1(
    omega1: f64,
    omega2: f64,
    c: f64,
    opt: &VerifyOptions,
) -> Result<TheoremReport> {
    if !(c > 0.0) {
        return Err(Error::invalid("coupling must be > 0"));
    }
    if !(opt.omega_a_step > 0.0
        && opt.omega_a_max >= opt.omega_a_min
        && opt.dt > 0.0
        && opt.hold > 0.0)
    {
        return Err(Error::config(
            "verify",
            "grid step, dt and hold must be > 0 with max >= min",
        ));
    }
    let (chi, nu) = chi_nu();
    let grid = opt.grid();
    let rows: Vec<TheoremRow> = grid
        .par_iter()
        .map(|&wa| -> Result<TheoremRow> {
            let roots = solve_phase_lock(omega1, omega2, wa, c)?;
            let best = roots
                .iter()
                .filter(|s| s.stable)
                .max_by(|a, b| a.r_net.total_cmp(&b.r_net));
            let start = match best {
                Some(s) => [s.theta1a + opt.perturbation, s.theta1a - s.theta12, 0.0],
                None => [opt.perturbation, 0.0, 0.0],
            };
            Ok(settle([omega1, omega2, wa], c, start, opt))
        })
        .collect::<Result<_>>()?;

    let best = rows
        .iter()
        .filter_map(|r| r.r_net.map(|v| (r.omega_a, v)))
        .fold(None, |acc: Option<(f64, f64)>, (w, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((w, v)),
        });
    let predicted = 0.5 * (omega1 + omega2);
    Ok(TheoremReport {
        omega1,
        omega2,
        c,
        chi,
        nu,
        hypothesis_holds: ((omega1 - omega2) / (2.0 * c)).abs() < nu,
        predicted_omega_a: predicted,
        argmax_omega_a: best.map(|b| b.0),
        max_r_net: best.map(|b| b.1),
        grid_step: opt.omega_a_step,
        argmax_within_resolution: best
            .is_some_and(|b| (b.0 - predicted).abs() <= opt.omega_a_step + 1e-9),
        rows,
    })
}
