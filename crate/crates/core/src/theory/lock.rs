use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kuramoto::wrap_angle;

/// `χ = 2·acos((−1 + √33)/8)` and `ν = sin χ + sin(χ/2)`: the extremum of
/// `sin θ + sin(θ/2)` on `[−π, π]` and its value.
pub fn chi_nu() -> (f64, f64) {
    let chi = 2.0 * ((-1.0 + 33f64.sqrt()) / 8.0).acos();
    (chi, chi.sin() + (chi / 2.0).sin())
}

/// A phase-locked configuration of the three-node network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLockSolution {
    /// θ1 − θ2.
    pub theta12: f64,
    /// Avatar phase minus the participants' mean phase.
    pub epsilon: f64,
    /// θ2 − θa.
    pub theta2a: f64,
    /// θ1 − θa.
    pub theta1a: f64,
    pub residuals: [f64; 2],
    pub stable: bool,
    pub eigenvalues: [(f64, f64); 2],
    /// Order parameter of the two participants.
    pub r_net: f64,
}

/// Lock conditions in `(θ12, ε)`:
///
/// ```text
/// 2 sin θ12 + 2 sin(θ12/2) cos ε              = (ω1 − ω2)/c
/// sin θ12 + 2 sin(θ12/2 − ε) − sin(θ12/2 + ε) = (ω1 − ωa)/c
/// ```
///
/// Both follow from setting the phase-difference velocities to zero.
pub fn lock_residuals(
    x: f64,
    eps: f64,
    omega1: f64,
    omega2: f64,
    omega_a: f64,
    c: f64,
) -> [f64; 2] {
    let h = x / 2.0;
    [
        2.0 * x.sin() + 2.0 * h.sin() * eps.cos() - (omega1 - omega2) / c,
        x.sin() + 2.0 * (h - eps).sin() - (h + eps).sin() - (omega1 - omega_a) / c,
    ]
}

fn residual_jacobian(x: f64, eps: f64) -> [[f64; 2]; 2] {
    let h = x / 2.0;
    [
        [
            2.0 * x.cos() + h.cos() * eps.cos(),
            -2.0 * h.sin() * eps.sin(),
        ],
        [
            x.cos() + (h - eps).cos() - 0.5 * (h + eps).cos(),
            -2.0 * (h - eps).cos() - (h + eps).cos(),
        ],
    ]
}

/// Jacobian of `(θ̇12, θ̇1a)` with respect to `(θ12, θ1a)`.
pub fn jacobian(theta12: f64, theta1a: f64, c: f64) -> [[f64; 2]; 2] {
    let (x, y) = (theta12, theta1a);
    [
        [
            c * (-2.0 * x.cos() - (x - y).cos()),
            c * (-y.cos() + (x - y).cos()),
        ],
        [
            c * (-x.cos() + (y - x).cos()),
            c * (-2.0 * y.cos() - (y - x).cos()),
        ],
    ]
}

/// Eigenvalues of [`jacobian`] from the characteristic quadratic, ordered
/// by real part.
pub fn jacobian_eigs(theta12: f64, theta1a: f64, c: f64) -> [Complex64; 2] {
    let j = jacobian(theta12, theta1a, c);
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let a = Complex64::new(tr / 2.0, 0.0) - disc;
    let b = Complex64::new(tr / 2.0, 0.0) + disc;
    if a.re <= b.re {
        [a, b]
    } else {
        [b, a]
    }
}

const GRID: usize = 64;
const TOL: f64 = 1e-12;
const MAX_ITERS: usize = 100;

fn norm_inf(r: &[f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Damped Newton from `(x, eps)`; `None` if it does not reach `TOL`.
fn newton(mut x: f64, mut eps: f64, w: (f64, f64, f64, f64)) -> Option<(f64, f64, [f64; 2])> {
    let (o1, o2, oa, c) = w;
    let mut r = lock_residuals(x, eps, o1, o2, oa, c);
    for _ in 0..MAX_ITERS {
        if norm_inf(&r) < TOL {
            return Some((x, eps, r));
        }
        let j = residual_jacobian(x, eps);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return None;
        }
        let dx = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let de = (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut t = 1.0;
        let base = norm_inf(&r);
        loop {
            let (nx, ne) = (x - t * dx, eps - t * de);
            let nr = lock_residuals(nx, ne, o1, o2, oa, c);
            if norm_inf(&nr) < base || t < 1e-6 {
                x = nx;
                eps = ne;
                r = nr;
                break;
            }
            t *= 0.5;
        }
    }
    (norm_inf(&r) < TOL).then_some((x, eps, r))
}

/// All lock configurations found from a 64×64 grid of Newton seeds over
/// `(θ12, ε) ∈ (−π, π]²`, deduplicated.
pub fn solve_phase_lock(
    omega1: f64,
    omega2: f64,
    omega_a: f64,
    c: f64,
) -> Result<Vec<PhaseLockSolution>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("coupling must be > 0"));
    }
    if ![omega1, omega2, omega_a].iter().all(|w| w.is_finite()) {
        return Err(Error::invalid("frequencies must be finite"));
    }
    let w = (omega1, omega2, omega_a, c);
    let step = 2.0 * PI / GRID as f64;
    let seeds: Vec<(f64, f64)> = (0..GRID * GRID)
        .map(|k| {
            let (i, j) = (k / GRID, k % GRID);
            (-PI + (i as f64 + 0.5) * step, -PI + (j as f64 + 0.5) * step)
        })
        .collect();
    let found: Vec<(f64, f64, [f64; 2])> = seeds
        .par_iter()
        .filter_map(|&(x, e)| newton(x, e, w))
        .collect();

    let mut roots: Vec<PhaseLockSolution> = Vec::new();
    for (x, e, _) in found {
        // The system is periodic under (θ12 + 2π, ε + π), not in each
        // coordinate alone, so ε moves with every wrap of θ12.
        let turns = ((x - wrap_angle(x)) / (2.0 * PI)).round();
        let (x, e) = (wrap_angle(x), wrap_angle(e - turns * PI));
        let r = lock_residuals(x, e, omega1, omega2, omega_a, c);
        // (θ12, θ1a) names the configuration uniquely; at θ12 = ±π both
        // representatives collapse to one.
        let theta1a = wrap_angle(x / 2.0 - e);
        let dup = roots.iter().any(|s| {
            wrap_angle(s.theta12 - x).abs() < 1e-8 && wrap_angle(s.theta1a - theta1a).abs() < 1e-8
        });
        if dup {
            continue;
        }
        let ev = jacobian_eigs(x, theta1a, c);
        roots.push(PhaseLockSolution {
            theta12: x,
            epsilon: e,
            theta2a: wrap_angle(-(x / 2.0 + e)),
            theta1a,
            residuals: r,
            stable: ev[0].re < 0.0 && ev[1].re < 0.0,
            eigenvalues: [(ev[0].re, ev[0].im), (ev[1].re, ev[1].im)],
            r_net: (x / 2.0).cos().abs(),
        });
    }
    roots.sort_by(|a, b| {
        a.theta12
            .abs()
            .total_cmp(&b.theta12.abs())
            .then(a.epsilon.total_cmp(&b.epsilon))
    });
    Ok(roots)
}
