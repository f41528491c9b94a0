use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        AdamState {
            m: MlpParams::zeros(&params.layer_sizes),
            v: MlpParams::zeros(&params.layer_sizes),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpParams,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.layer_sizes != grads.layer_sizes || params.layer_sizes != state.m.layer_sizes {
        return Err(Error::invalid(
            "optimizer state does not match parameter shape",
        ));
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let tensors = params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().zip(state.v.tensors_mut()));
    for ((p, g), (m, v)) in tensors {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> MlpParams {
        MlpParams {
            layer_sizes: vec![1, 1],
            weights: vec![vec![x]],
            biases: vec![vec![0.0]],
        }
    }

    #[test]
    fn first_step_on_square() {
        // f = x², x = 1 → g = 2. m̂ = 2, v̂ = 4, step = lr·2/(2+eps) ≈ lr.
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &scalar(2.0), &mut st, &AdamConfig::default()).unwrap();
        let expected = 1.0 - 1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((p.weights[0][0] - expected).abs() < 1e-15);
        assert!((p.weights[0][0] - 0.999).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &scalar(2.0), &mut st, &cfg).unwrap();
        let before = p.clone();
        let m_before = st.m.weights[0][0];
        adam_step(&mut p, &scalar(0.0), &mut st, &cfg).unwrap();
        // Parameters still move by the remaining momentum, but the bias term has zero gradient throughout.
        assert_eq!(p.biases, before.biases);
        assert!((st.m.weights[0][0] - 0.9 * m_before).abs() < 1e-15);

        let mut q = scalar(3.0);
        let mut st = AdamState::new(&q);
        adam_step(&mut q, &scalar(0.0), &mut st, &cfg).unwrap();
        assert_eq!(q.weights[0][0], 3.0);
    }

    #[test]
    fn deterministic() {
        let mut a = scalar(1.0);
        let mut b = scalar(1.0);
        let (mut sa, mut sb) = (AdamState::new(&a), AdamState::new(&b));
        let cfg = AdamConfig::default();
        for g in [0.3, -1.0, 2.0] {
            adam_step(&mut a, &scalar(g), &mut sa, &cfg).unwrap();
            adam_step(&mut b, &scalar(g), &mut sb, &cfg).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p);
        let g = MlpParams::zeros(&[1, 2]);
        assert!(adam_step(&mut p, &g, &mut st, &AdamConfig::default()).is_err());
    }
}
