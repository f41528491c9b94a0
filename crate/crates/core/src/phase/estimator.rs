use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running amplitudes of the position and velocity half-waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    pub p_pos: f64,
    pub p_neg: f64,
    pub v_pos: f64,
    pub v_neg: f64,
}

impl Amplitudes {
    pub fn new(p_pos: f64, p_neg: f64, v_pos: f64, v_neg: f64) -> Result<Self> {
        let a = Amplitudes {
            p_pos,
            p_neg,
            v_pos,
            v_neg,
        };
        if a.as_array().iter().all(|&x| x > 0.0 && x.is_finite()) {
            Ok(a)
        } else {
            Err(Error::invalid(format!(
                "amplitudes must be positive and finite, got {a:?}"
            )))
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pos, self.p_neg, self.v_pos, self.v_neg]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub p_prev: f64,
    pub v_prev: f64,
    pub amplitudes: Amplitudes,
    /// Last returned phase.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub theta: f64,
    /// The sample was non-finite and the previous phase was held.
    pub invalid: bool,
    /// `p = v = 0`; the previous phase was held.
    pub held: bool,
}

impl EstimatorState {
    /// Registers set verbatim. `p0`, `v0` act as the previous sample.
    pub fn with_amplitudes(amplitudes: Amplitudes, p0: f64, v0: f64) -> Result<Self> {
        let a = Amplitudes::new(
            amplitudes.p_pos,
            amplitudes.p_neg,
            amplitudes.v_pos,
            amplitudes.v_neg,
        )?;
        if !(p0.is_finite() && v0.is_finite()) {
            return Err(Error::invalid("initial sample must be finite"));
        }
        let mut s = EstimatorState {
            p_prev: p0,
            v_prev: v0,
            amplitudes: a,
            theta: 0.0,
        };
        s.theta = s.phase_of(p0, v0).unwrap_or(0.0);
        Ok(s)
    }

    /// Seeds every register from the largest |p| and |v| of a bootstrap
    /// window; the last sample becomes the previous one.
    pub fn bootstrap(positions: &[f64], velocities: &[f64]) -> Result<Self> {
        if positions.is_empty() || positions.len() != velocities.len() {
            return Err(Error::invalid(
                "bootstrap needs matching, nonempty position and velocity windows",
            ));
        }
        let max_abs = |xs: &[f64]| {
            xs.iter()
                .filter(|x| x.is_finite())
                .fold(0.0f64, |m, x| m.max(x.abs()))
        };
        let (ap, av) = (max_abs(positions), max_abs(velocities));
        if !(ap > 0.0 && av > 0.0) {
            return Err(Error::invalid("bootstrap window has no motion"));
        }
        let last = positions.len() - 1;
        Self::with_amplitudes(
            Amplitudes {
                p_pos: ap,
                p_neg: ap,
                v_pos: av,
                v_neg: av,
            },
            positions[last],
            velocities[last],
        )
    }

    fn phase_of(&self, p: f64, v: f64) -> Option<f64> {
        if p == 0.0 && v == 0.0 {
            return None;
        }
        let a = &self.amplitudes;
        let pn = if p >= 0.0 { p / a.p_pos } else { p / a.p_neg };
        let vn = if v >= 0.0 { v / a.v_pos } else { v / a.v_neg };
        Some((-vn).atan2(pn))
    }

    /// One step of the estimator.
    pub fn estimate_step(&mut self, p: f64, v: f64) -> StepOutcome {
        if !(p.is_finite() && v.is_finite()) {
            return StepOutcome {
                theta: self.theta,
                invalid: true,
                held: true,
            };
        }
        let (p0, v0) = (self.p_prev, self.v_prev);
        let a = &mut self.amplitudes;
        // Position zero crossings refresh the velocity amplitudes and vice versa.
        // A zero reading would leave a register unusable, so it is skipped.
        if p0 < 0.0 && p >= 0.0 && v != 0.0 {
            a.v_pos = v.abs();
        }
        if p0 >= 0.0 && p < 0.0 && v != 0.0 {
            a.v_neg = v.abs();
        }
        if v0 >= 0.0 && v < 0.0 && p != 0.0 {
            a.p_pos = p.abs();
        }
        if v0 < 0.0 && v >= 0.0 && p != 0.0 {
            a.p_neg = p.abs();
        }
        self.p_prev = p;
        self.v_prev = v;
        match self.phase_of(p, v) {
            Some(th) => {
                // atan2 returns −π for (−0, −x); fold onto the half-open range.
                self.theta = if th <= -std::f64::consts::PI {
                    std::f64::consts::PI
                } else {
                    th
                };
                StepOutcome {
                    theta: self.theta,
                    invalid: false,
                    held: false,
                }
            }
            None => StepOutcome {
                theta: self.theta,
                invalid: false,
                held: true,
            },
        }
    }
}

/// Position of a ball driven by phase `theta`, scaled by the mean
/// half-wave amplitudes `(A^{p>0}, A^{p<0})` of the participants.
pub fn phase_to_position(theta: f64, participant_amplitudes: &[(f64, f64)]) -> Result<f64> {
    if participant_amplitudes.is_empty() {
        return Err(Error::InvalidState(
            "no participant amplitudes available".into(),
        ));
    }
    let n = participant_amplitudes.len() as f64;
    let (sp, sn) = participant_amplitudes
        .iter()
        .fold((0.0, 0.0), |(a, b), &(p, q)| (a + p, b + q));
    let (ap, an) = (sp / n, sn / n);
    let th = crate::kuramoto::wrap_angle(theta);
    let amp = if (-FRAC_PI_2..=FRAC_PI_2).contains(&th) {
        ap
    } else {
        an
    };
    Ok(amp * th.cos())
}
