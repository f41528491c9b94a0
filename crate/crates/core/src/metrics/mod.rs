//! Synchronization observables.
//!
//! Order parameters (`r_tot`, `r_net`), time averages, group synchronization
//! indices (`rho_tot`, `rho_net`, see [`group_index`]), circular variance and
//! the algebraic connectivity of a graph (see [`spectral`]).

pub mod group_index;
pub mod spectral;

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_csv};
use crate::kuramoto::Trajectory;

pub use group_index::{group_sync_index, group_sync_series};
pub use spectral::{algebraic_connectivity, laplacian_spectrum};

/// Magnitudes below this are treated as a vanishing phasor whose argument is
/// reported as 0.
pub const ZERO_PHASOR: f64 = 1e-12;

/// Mean of `e^{iθ}` over the given angles.
pub fn mean_phasor<I: IntoIterator<Item = f64>>(angles: I) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for th in angles {
        let (s, c) = th.sin_cos();
        sum += Complex64::new(c, s);
        count += 1;
    }
    if count == 0 {
        sum
    } else {
        sum / count as f64
    }
}

/// `arg z`, with the convention `arg 0 = 0`. The flag is `true` when that
/// convention was used.
pub fn safe_arg(z: Complex64) -> (f64, bool) {
    if z.norm() < ZERO_PHASOR {
        (0.0, true)
    } else {
        (z.arg(), false)
    }
}

/// Total and net average phasors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasors {
    pub q_tot: Complex64,
    pub q_net: Complex64,
}

pub fn phasors(phases: &[f64], participant_ids: &[usize]) -> Result<Phasors> {
    if participant_ids.is_empty() {
        return Err(Error::invalid("participant set is empty"));
    }
    if let Some(&bad) = participant_ids.iter().find(|&&i| i >= phases.len()) {
        return Err(Error::invalid(format!("participant {bad} out of range")));
    }
    Ok(Phasors {
        q_tot: mean_phasor(phases.iter().copied()),
        q_net: mean_phasor(participant_ids.iter().map(|&i| phases[i])),
    })
}

/// `(r_tot, r_net)`: magnitude of the mean phasor over all nodes and over
/// participants only.
pub fn order_parameters(
    phases: &[f64],
    participant_ids: &[usize],
    avatar_ids: &[usize],
) -> Result<(f64, f64)> {
    if let Some(&bad) = avatar_ids.iter().find(|&&i| i >= phases.len()) {
        return Err(Error::invalid(format!("avatar {bad} out of range")));
    }
    let p = phasors(phases, participant_ids)?;
    let r_tot = p.q_tot.norm().min(1.0);
    let r_net = if avatar_ids.is_empty() && participant_ids.len() == phases.len() {
        r_tot
    } else {
        p.q_net.norm().min(1.0)
    };
    Ok((r_tot, r_net))
}

/// `1 − |mean e^{iφ}|`.
pub fn circular_variance(relative_phases: &[f64]) -> Result<f64> {
    if relative_phases.is_empty() {
        return Err(Error::invalid("circular variance of an empty set"));
    }
    Ok((1.0 - mean_phasor(relative_phases.iter().copied()).norm()).clamp(0.0, 1.0))
}

/// Trapezoidal time average of a uniformly sampled series over
/// `[from, T]`, where sample `k` sits at `t = k·dt`.
pub fn time_average(series: &[f64], dt: f64, from: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be > 0"));
    }
    let start = (from / dt - 1e-9).ceil().max(0.0) as usize;
    if series.len() < 2 || start + 1 >= series.len() {
        return Err(Error::invalid(format!(
            "empty averaging window: from={from} with {} samples",
            series.len()
        )));
    }
    let w = &series[start..];
    let inner: f64 = w[1..w.len() - 1].iter().sum();
    let integral = inner + 0.5 * (w[0] + w[w.len() - 1]);
    Ok(integral / (w.len() - 1) as f64)
}

/// Per-sample synchronization observables of a trajectory and their time
/// averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub dt: f64,
    pub window: f64,
    pub r_tot: Vec<f64>,
    pub r_net: Vec<f64>,
    /// `None` before the first full window.
    pub rho_tot: Vec<Option<f64>>,
    pub rho_net: Vec<Option<f64>>,
    pub averages: MetricAverages,
    /// Number of samples where some phasor argument was undefined and taken
    /// as 0.
    pub zero_phasor_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAverages {
    pub r_net: f64,
    pub r_tot: f64,
    /// `None` when the run is not longer than the window.
    pub rho_net: Option<f64>,
    pub rho_tot: Option<f64>,
}

impl MetricsSeries {
    pub fn from_trajectory(traj: &Trajectory, window: f64) -> Result<Self> {
        let mut r_tot = Vec::with_capacity(traj.phases.len());
        let mut r_net = Vec::with_capacity(traj.phases.len());
        for th in &traj.phases {
            let (t, n) = order_parameters(th, &traj.participant_ids, &traj.avatar_ids)?;
            r_tot.push(t);
            r_net.push(n);
        }
        let all: Vec<usize> = (0..traj.n()).collect();
        let (rho_tot, z1) = group_sync_series(&traj.phases, traj.dt, window, &all)?;
        let (rho_net, z2) =
            group_sync_series(&traj.phases, traj.dt, window, &traj.participant_ids)?;
        let rho_avg = |s: &[Option<f64>]| -> Option<f64> {
            let first = s.iter().position(Option::is_some)?;
            let vals: Vec<f64> = s[first..].iter().map(|v| v.unwrap_or(0.0)).collect();
            if vals.len() < 2 {
                return None;
            }
            time_average(&vals, traj.dt, 0.0).ok()
        };
        let averages = MetricAverages {
            r_net: time_average(&r_net, traj.dt, 0.0)?,
            r_tot: time_average(&r_tot, traj.dt, 0.0)?,
            rho_net: rho_avg(&rho_net),
            rho_tot: rho_avg(&rho_tot),
        };
        Ok(MetricsSeries {
            dt: traj.dt,
            window,
            r_tot,
            r_net,
            rho_tot,
            rho_net,
            averages,
            zero_phasor_samples: z1 + z2,
        })
    }

    /// Writes `k,t,r_tot,r_net,rho_tot,rho_net`; undefined ρ cells are empty.
    pub fn write_csv(&self, path: &Path, config_hash: &str) -> Result<()> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let rows: Vec<Vec<String>> = (0..self.r_tot.len())
            .map(|k| {
                vec![
                    k.to_string(),
                    fmt_f64(k as f64 * self.dt),
                    fmt_f64(self.r_tot[k]),
                    fmt_f64(self.r_net[k]),
                    opt(self.rho_tot[k]),
                    opt(self.rho_net[k]),
                ]
            })
            .collect();
        let comments = vec![
            ("T_w".to_string(), fmt_f64(self.window)),
            ("config_hash".to_string(), config_hash.to_string()),
        ];
        write_csv(
            path,
            &comments,
            &["k", "t", "r_tot", "r_net", "rho_tot", "rho_net"],
            &rows,
        )
    }
}
