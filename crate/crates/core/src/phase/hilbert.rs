use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const MIN_HILBERT_SAMPLES: usize = 64;

/// Phase of the analytic signal of `signal` (mean removed): negative
/// frequencies are zeroed and positive ones doubled. Offline validation
/// only, since it needs the whole record.
pub fn hilbert_phase_offline(signal: &[f64]) -> Result<Vec<f64>> {
    let n = signal.len();
    if n < MIN_HILBERT_SAMPLES {
        return Err(Error::invalid(format!(
            "hilbert reference needs at least {MIN_HILBERT_SAMPLES} samples, got {n}"
        )));
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = signal
        .iter()
        .map(|v| Complex64::new(v - mean, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, s) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *s *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|z| z.arg()).collect())
}
