//! Fully connected Q-network: rectified-linear hidden layers, identity output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input, hidden and output widths of the Q-network.
pub const DEFAULT_LAYERS: [usize; 4] = [3, 128, 64, 11];

/// Weights are stored per layer as row-major `outputs × inputs` arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations retained from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, the last entry the output.
    pub activations: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&o| vec![0.0; o]).collect();
        MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// Weights and biases drawn from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn init<R: Rng>(layer_sizes: &[usize], rng: &mut R) -> Self {
        let mut p = Self::zeros(layer_sizes);
        for (l, w) in layer_sizes.windows(2).enumerate() {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for x in p.weights[l].iter_mut().chain(p.biases[l].iter_mut()) {
                *x = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("at least one layer")
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::invalid(
                "network needs at least two non-empty layers",
            ));
        }
        let l = self.num_layers();
        if self.weights.len() != l || self.biases.len() != l {
            return Err(Error::invalid(
                "weight/bias count does not match layer sizes",
            ));
        }
        for (i, w) in self.layer_sizes.windows(2).enumerate() {
            if self.weights[i].len() != w[0] * w[1] || self.biases[i].len() != w[1] {
                return Err(Error::invalid(format!("layer {i} has inconsistent shape")));
            }
        }
        if !self.is_finite() {
            return Err(Error::invalid("network contains non-finite parameters"));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Flat views of every tensor, `W0, b0, W1, b1, …`.
    pub fn tensors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w, b])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
    }

    /// Forward pass returning every layer's activations.
    pub fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(input.to_vec());
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let x = &activations[l];
            let n_in = self.layer_sizes[l];
            let w = &self.weights[l];
            let mut z: Vec<f64> = self.biases[l].clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *zo += dot(row, x);
            }
            if l < last {
                relu(&mut z);
            }
            activations.push(z);
        }
        ForwardCache { activations }
    }

    /// Column-major copies of the weights for batched passes.
    pub fn transposed(&self) -> Transposed {
        let wt = self
            .layer_sizes
            .windows(2)
            .zip(&self.weights)
            .map(|(d, w)| {
                let (n_in, n_out) = (d[0], d[1]);
                let mut t = vec![0.0; n_in * n_out];
                for o in 0..n_out {
                    for i in 0..n_in {
                        t[i * n_out + o] = w[o * n_in + i];
                    }
                }
                t
            })
            .collect();
        Transposed { wt }
    }

    /// Same as [`forward_cached`](Self::forward_cached) but accumulates
    /// column by column, which vectorizes.
    pub fn forward_cached_t(&self, t: &Transposed, input: &[f64]) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(input.to_vec());
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let n_out = self.layer_sizes[l + 1];
            let mut z: Vec<f64> = self.biases[l].clone();
            for (i, &xi) in activations[l].iter().enumerate() {
                if xi != 0.0 {
                    axpy(xi, &t.wt[l][i * n_out..(i + 1) * n_out], &mut z);
                }
            }
            if l < last {
                relu(&mut z);
            }
            activations.push(z);
        }
        ForwardCache { activations }
    }

    /// Outputs for several inputs.
    pub fn forward_batch(&self, inputs: &[&[f64]]) -> Vec<Vec<f64>> {
        let t = self.transposed();
        inputs
            .iter()
            .map(|x| {
                self.forward_cached_t(&t, x)
                    .activations
                    .pop()
                    .expect("output layer")
            })
            .collect()
    }

    pub fn forward_unchecked(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input)
            .activations
            .pop()
            .expect("output layer")
    }

    /// Q-values for one input.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_size() {
            return Err(Error::invalid(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_size()
            )));
        }
        if !input.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("non-finite network input"));
        }
        Ok(self.forward_unchecked(input))
    }

    /// Adds the gradient of `Σ_o dout[o]·y_o` with respect to the parameters
    /// into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache, dout: &[f64], grads: &mut MlpParams) {
        let mut delta = dout.to_vec();
        for l in (0..self.num_layers()).rev() {
            let n_in = self.layer_sizes[l];
            let x = &cache.activations[l];
            let gw = &mut grads.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grads.biases[l][o] += d;
                axpy(d, x, &mut gw[o * n_in..(o + 1) * n_in]);
            }
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, &w[o * n_in..(o + 1) * n_in], &mut prev);
                }
            }
            // Hidden activations are ReLU outputs: derivative is 1 where positive.
            for (p, &a) in prev.iter_mut().zip(x) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
}

/// Transposed weights, see [`MlpParams::transposed`].
#[derive(Debug, Clone)]
pub struct Transposed {
    wt: Vec<Vec<f64>>,
}

/// One regression sample for the taken action.
#[derive(Debug, Clone, Copy)]
pub struct QTarget<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Gradient of `(1/B) Σ_b (Q(s_b, a_b) − y_b)²`, plus the loss itself.
pub fn mlp_backward(params: &MlpParams, batch: &[QTarget<'_>]) -> Result<(MlpParams, f64)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let mut grads = MlpParams::zeros(&params.layer_sizes);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut dout = vec![0.0; params.output_size()];
    let t = params.transposed();
    for s in batch {
        if s.input.len() != params.input_size() || s.action >= params.output_size() {
            return Err(Error::invalid("batch sample shape mismatch"));
        }
        let cache = params.forward_cached_t(&t, s.input);
        let q = cache.activations.last().expect("output")[s.action];
        let err = q - s.target;
        loss += err * err * scale;
        dout.iter_mut().for_each(|d| *d = 0.0);
        dout[s.action] = 2.0 * err * scale;
        params.backward_into(&cache, &dout, &mut grads);
    }
    Ok((grads, loss))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler use vector lanes.
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    let mut s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn relu(z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = v.max(0.0);
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    /// Straightforward matrix-multiply reimplementation used as an oracle.
    fn reference_forward(p: &MlpParams, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for l in 0..p.num_layers() {
            let (n_in, n_out) = (p.layer_sizes[l], p.layer_sizes[l + 1]);
            let mut z = vec![0.0; n_out];
            for o in 0..n_out {
                let mut acc = 0.0;
                for i in 0..n_in {
                    acc += p.weights[l][o * n_in + i] * a[i];
                }
                z[o] = acc + p.biases[l][o];
            }
            if l + 1 < p.num_layers() {
                z = z
                    .into_iter()
                    .map(|v| if v > 0.0 { v } else { 0.0 })
                    .collect();
            }
            a = z;
        }
        a
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(&DEFAULT_LAYERS);
        assert_eq!(p.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 11]);
    }

    #[test]
    fn single_path_chain() {
        // 1-1-1: y = w2 * relu(w1 x + b1) + b2
        let p = MlpParams {
            layer_sizes: vec![1, 1, 1],
            weights: vec![vec![2.0], vec![-3.0]],
            biases: vec![vec![0.5], vec![1.0]],
        };
        assert_eq!(p.forward(&[1.0]).unwrap(), vec![-3.0 * 2.5 + 1.0]);
        // Negative pre-activation is cut by the rectifier.
        assert_eq!(p.forward(&[-1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn matches_reference_implementation() {
        let mut rng = seeded(5);
        for _ in 0..5 {
            let p = MlpParams::init(&DEFAULT_LAYERS, &mut rng);
            let x = [
                rng.random_range(-3.0..3.0),
                rng.random::<f64>(),
                rng.random_range(2.0..6.0),
            ];
            let a = p.forward(&x).unwrap();
            let b = reference_forward(&p, &x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn batched_path_matches_reference() {
        let mut rng = seeded(6);
        let p = MlpParams::init(&DEFAULT_LAYERS, &mut rng);
        let xs: Vec<[f64; 3]> = (0..8)
            .map(|_| {
                [
                    rng.random_range(-3.0..3.0),
                    rng.random::<f64>(),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let refs: Vec<&[f64]> = xs.iter().map(|x| &x[..]).collect();
        for (x, y) in xs.iter().zip(p.forward_batch(&refs)) {
            for (u, v) in y.iter().zip(reference_forward(&p, x)) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let p = MlpParams::zeros(&DEFAULT_LAYERS);
        assert!(p.forward(&[1.0, 2.0]).is_err());
        assert!(p.forward(&[1.0, f64::NAN, 0.0]).is_err());
        let mut bad = p.clone();
        bad.biases[1].pop();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let mut rng = seeded(8);
        let p = MlpParams::init(&DEFAULT_LAYERS, &mut rng);
        let x = [0.1, 0.2, 4.0];
        let q = p.forward_batch(&[&x]).pop().unwrap();
        let batch = [QTarget {
            input: &x,
            action: 3,
            target: q[3],
        }];
        let (g, loss) = mlp_backward(&p, &batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.tensors().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn linear_chain_gradient_by_hand() {
        // y = w2 (w1 x + b1) + b2 with positive hidden pre-activation.
        let (w1, b1, w2, b2, x, target) = (0.5, 0.25, 2.0, -1.0, 3.0, 0.0);
        let p = MlpParams {
            layer_sizes: vec![1, 1, 1],
            weights: vec![vec![w1], vec![w2]],
            biases: vec![vec![b1], vec![b2]],
        };
        let h = w1 * x + b1;
        let y = w2 * h + b2;
        let e = 2.0 * (y - target);
        let input = [x];
        let (g, loss) = mlp_backward(
            &p,
            &[QTarget {
                input: &input,
                action: 0,
                target,
            }],
        )
        .unwrap();
        assert!((loss - (y - target).powi(2)).abs() < 1e-15);
        assert!((g.weights[1][0] - e * h).abs() < 1e-14);
        assert!((g.biases[1][0] - e).abs() < 1e-14);
        assert!((g.weights[0][0] - e * w2 * x).abs() < 1e-14);
        assert!((g.biases[0][0] - e * w2).abs() < 1e-14);
    }

    #[test]
    fn empty_batch_rejected() {
        let p = MlpParams::zeros(&[1, 1]);
        assert!(mlp_backward(&p, &[]).is_err());
    }
}
