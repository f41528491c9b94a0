//! Group synchronization index ρ.
//!
//! For a node subset `S` with mean phasor `q_S(t)`:
//!
//! ```text
//! ψ(t)    = arg q_S(t)
//! φ_i(t)  = θ_i(t) − ψ(t)
//! s_i(t)  = (1/T_w) ∫_{t−T_w}^{t} e^{iφ_i(τ)} dτ
//! Δφ_i(t) = φ_i(t) − arg s_i(t)
//! ρ(t)    = |(1/|S|) Σ_{i∈S} e^{iΔφ_i(t)}|
//! ```
//!
//! The window integral uses the trapezoidal rule over the `W + 1` samples
//! spanning `T_w = W·dt`. ρ is defined from sample `W` onwards.

use num_complex::Complex64;

use super::{mean_phasor, safe_arg};
use crate::error::{Error, Result};

fn window_steps(dt: f64, t_w: f64) -> Result<usize> {
    if !(dt > 0.0 && t_w > 0.0) {
        return Err(Error::invalid("dt and T_w must be > 0"));
    }
    Ok(((t_w / dt).round() as usize).max(1))
}

fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::invalid("node subset is empty"));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("node {bad} out of range")));
    }
    Ok(())
}

/// Relative phasors `e^{iφ_i(k)}` for every sample and subset member, plus
/// the number of samples where `ψ` was undefined.
fn relative_phasors(history: &[Vec<f64>], subset: &[usize]) -> (Vec<Vec<Complex64>>, usize) {
    let mut flagged = 0;
    let rows = history
        .iter()
        .map(|th| {
            let (psi, z) = safe_arg(mean_phasor(subset.iter().map(|&i| th[i])));
            flagged += usize::from(z);
            subset
                .iter()
                .map(|&i| {
                    let (s, c) = (th[i] - psi).sin_cos();
                    Complex64::new(c, s)
                })
                .collect()
        })
        .collect();
    (rows, flagged)
}

/// ρ evaluated at the last sample of `history`, using the trailing `T_w`.
pub fn group_sync_index(history: &[Vec<f64>], dt: f64, t_w: f64, subset: &[usize]) -> Result<f64> {
    let w = window_steps(dt, t_w)?;
    if history.len() < w + 1 {
        return Err(Error::InsufficientHistory {
            needed: w + 1,
            available: history.len(),
        });
    }
    check_subset(subset, history[0].len())?;
    let tail = &history[history.len() - (w + 1)..];
    let (z, _) = relative_phasors(tail, subset);
    let current = &z[w];
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, &zi) in current.iter().enumerate() {
        let mut s = 0.5 * (z[0][m] + z[w][m]);
        for row in &z[1..w] {
            s += row[m];
        }
        let (bar, _) = safe_arg(s);
        acc += zi * Complex64::from_polar(1.0, -bar);
    }
    Ok((acc.norm() / subset.len() as f64).min(1.0))
}

/// ρ at every sample (`None` for the first `W` samples), using running
/// window sums. Returns the series and the count of undefined-argument
/// samples.
pub fn group_sync_series(
    history: &[Vec<f64>],
    dt: f64,
    t_w: f64,
    subset: &[usize],
) -> Result<(Vec<Option<f64>>, usize)> {
    let w = window_steps(dt, t_w)?;
    let mut out = vec![None; history.len()];
    if history.is_empty() {
        return Ok((out, 0));
    }
    check_subset(subset, history[0].len())?;
    let (z, mut flagged) = relative_phasors(history, subset);
    let m = subset.len();
    // prefix[k] = Σ_{j<k} z[j]
    let mut prefix = vec![vec![Complex64::new(0.0, 0.0); m]; history.len() + 1];
    for k in 0..history.len() {
        for i in 0..m {
            prefix[k + 1][i] = prefix[k][i] + z[k][i];
        }
    }
    for k in w..history.len() {
        let lo = k - w;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let s = prefix[k + 1][i] - prefix[lo][i] - 0.5 * (z[lo][i] + z[k][i]);
            let (bar, zf) = safe_arg(s);
            flagged += usize::from(zf);
            acc += z[k][i] * Complex64::from_polar(1.0, -bar);
        }
        out[k] = Some((acc.norm() / m as f64).min(1.0));
    }
    Ok((out, flagged))
}
