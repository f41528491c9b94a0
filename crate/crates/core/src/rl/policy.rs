use rand::Rng;

use crate::rng::SimRng;

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice over `q.len()` actions. With `epsilon == 0` no random
/// numbers are consumed.
pub fn select_action(q: &[f64], epsilon: f64, rng: &mut SimRng) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}
