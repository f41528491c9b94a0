//! Reference implementations shared by the integration suites. Nothing here
//! calls into the library under test.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use synchrony::rl::MlpParams;

pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) * f(hi) <= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Analytic-signal phase by the textbook DFT, O(N²).
pub fn dft_hilbert(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let w = |k: usize| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64);
    let spec: Vec<Complex64> = (0..n)
        .map(|k| (0..n).map(|j| w(k * j % n) * (x[j] - mean)).sum())
        .collect();
    let gain = |k: usize| {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        }
    };
    (0..n)
        .map(|j| {
            let z: Complex64 = (0..n)
                .map(|k| spec[k] * gain(k) * w(k * j % n).conj())
                .sum();
            z.arg()
        })
        .collect()
}

/// Slowly varying amplitude and frequency around 4 rad/s.
pub fn varying(t: f64) -> f64 {
    let amp = 0.8 + 0.2 * (0.5 * t).sin();
    let phase = 4.0 * t + 1.5 * (1.0 - (0.4 * t).cos());
    amp * phase.cos()
}

/// Mean squared TD loss from a scalar forward pass.
pub fn mlp_loss(p: &MlpParams, batch: &[(Vec<f64>, usize, f64)]) -> f64 {
    mlp_loss_and_pattern(p, batch).0
}

/// Loss plus the on/off state of every hidden ReLU over the batch.
fn mlp_loss_and_pattern(p: &MlpParams, batch: &[(Vec<f64>, usize, f64)]) -> (f64, Vec<bool>) {
    let mut total = 0.0;
    let mut pattern = Vec::new();
    for (x, a, y) in batch {
        let mut h = x.clone();
        let last = p.weights.len() - 1;
        for (l, (w, b)) in p.weights.iter().zip(&p.biases).enumerate() {
            let (n_in, n_out) = (p.layer_sizes[l], p.layer_sizes[l + 1]);
            let mut next = vec![0.0; n_out];
            for (o, v) in next.iter_mut().enumerate() {
                let mut s = b[o];
                for i in 0..n_in {
                    s += w[o * n_in + i] * h[i];
                }
                if l < last {
                    pattern.push(s > 0.0);
                    *v = s.max(0.0);
                } else {
                    *v = s;
                }
            }
            h = next;
        }
        total += (h[*a] - y).powi(2);
    }
    (total / batch.len() as f64, pattern)
}

/// Central difference along one parameter. With the ReLU pattern fixed the
/// loss is quadratic in any single parameter, so the difference is exact
/// up to rounding; the step starts large to keep rounding small and is
/// halved until neither side crosses a kink.
fn central_difference(
    p: &MlpParams,
    batch: &[(Vec<f64>, usize, f64)],
    nudge: &dyn Fn(&mut MlpParams, f64),
) -> f64 {
    let (_, base) = mlp_loss_and_pattern(p, batch);
    let mut h = 1e-3;
    loop {
        let mut plus = p.clone();
        nudge(&mut plus, h);
        let mut minus = p.clone();
        nudge(&mut minus, -h);
        let (lp, pp) = mlp_loss_and_pattern(&plus, batch);
        let (lm, pm) = mlp_loss_and_pattern(&minus, batch);
        if (pp == base && pm == base) || h < 1e-9 {
            return (lp - lm) / (2.0 * h);
        }
        h /= 2.0;
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

/// Worst relative error between the library's backward pass and central
/// differences of [`mlp_loss`] over every bias and a spread of weights.
pub fn gradient_check(sizes: &[usize], seed: u64) -> f64 {
    use rand::Rng;
    use synchrony::rl::{mlp_backward, QTarget};
    let mut rng = synchrony::rng::seeded(seed);
    let p = MlpParams::init(sizes, &mut rng);
    let n_in = sizes[0];
    let n_out = sizes[sizes.len() - 1];
    let batch: Vec<(Vec<f64>, usize, f64)> = (0..4)
        .map(|_| {
            let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.5..1.5)).collect();
            (x, rng.random_range(0..n_out), rng.random_range(-1.0..2.0))
        })
        .collect();
    let samples: Vec<QTarget> = batch
        .iter()
        .map(|(x, a, y)| QTarget {
            input: x,
            action: *a,
            target: *y,
        })
        .collect();
    let (grads, l) = mlp_backward(&p, &samples).unwrap();
    let mut worst = relative_error(l, mlp_loss(&p, &batch));
    let mut compare = |g: f64, d: f64| {
        if d.abs() > 1e-9 || g.abs() > 1e-9 {
            worst = worst.max(relative_error(g, d));
        }
    };
    for layer in 0..p.weights.len() {
        let nw = p.weights[layer].len();
        for i in (0..nw).step_by((nw / 40).max(1)) {
            compare(
                grads.weights[layer][i],
                central_difference(&p, &batch, &|q, e| q.weights[layer][i] += e),
            );
        }
        for i in 0..p.biases[layer].len() {
            compare(
                grads.biases[layer][i],
                central_difference(&p, &batch, &|q, e| q.biases[layer][i] += e),
            );
        }
    }
    worst
}

/// Breadth-first connectivity of an undirected 0/1 adjacency matrix.
pub fn connected(adj: &[Vec<u8>]) -> bool {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if (adj[i][j] == 1 || adj[j][i] == 1) && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
