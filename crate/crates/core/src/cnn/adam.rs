//! ADAM parameter updates with bias correction. The paper exposes the
//! learning rate and the momentum; the second-moment decay and epsilon
//! stay at their conventional values.

use serde::{Deserialize, Serialize};

pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Per-parameter first/second moment accumulators plus the step count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizerState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    /// `sizes`: flat length of each parameter block, in the same order
    /// the blocks are passed to `adam_step`.
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One ADAM update over all parameter blocks; `mu` plays the role of
/// the first-moment decay (beta1).
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut OptimizerState,
    alpha: f64,
    mu: f64,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - mu.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);

    for (block, (grad, (ms, vs))) in
        params.iter_mut().zip(grads.iter().zip(state.m.iter_mut().zip(state.v.iter_mut())))
    {
        assert_eq!(block.len(), grad.len());
        for i in 0..block.len() {
            let g = grad[i];
            ms[i] = mu * ms[i] + (1.0 - mu) * g;
            vs[i] = ADAM_BETA2 * vs[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = ms[i] / bc1;
            let v_hat = vs[i] / bc2;
            block[i] -= alpha * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = vec![1.0, -2.0, 3.0];
        let g = vec![0.0; 3];
        let mut state = OptimizerState::new(&[3]);
        adam_step(&mut [&mut p], &[&g], &mut state, 0.01, 0.9);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_alpha_times_sign() {
        // With zero state, bias correction makes m_hat = g and
        // v_hat = g^2, so the update is -alpha * sign(g) up to epsilon.
        let mut p = vec![0.0, 0.0];
        let g = vec![3.5, -0.25];
        let mut state = OptimizerState::new(&[2]);
        let alpha = 0.05;
        adam_step(&mut [&mut p], &[&g], &mut state, alpha, 0.9);
        assert!((p[0] + alpha).abs() < 1e-7);
        assert!((p[1] - alpha).abs() < 1e-6);
    }

    #[test]
    fn constant_gradient_update_magnitude_approaches_alpha() {
        // Iterating the recurrence with a constant gradient: m_hat -> g,
        // v_hat -> g^2, so the per-step movement tends to alpha.
        let mut p = vec![10.0];
        let g = vec![0.7];
        let mut state = OptimizerState::new(&[1]);
        let alpha = 0.01;
        let mut prev = p[0];
        let mut last_delta = 0.0;
        for _ in 0..500 {
            adam_step(&mut [&mut p], &[&g], &mut state, alpha, 0.9);
            last_delta = prev - p[0];
            prev = p[0];
        }
        assert!((last_delta - alpha).abs() < 1e-6, "delta {last_delta} vs alpha {alpha}");
    }

    #[test]
    fn independent_reference_recurrence() {
        // Re-run the textbook recurrence scalar-by-scalar and compare.
        let mut p = vec![0.3];
        let mut state = OptimizerState::new(&[1]);
        let (alpha, mu) = (0.002, 0.85);
        let grads = [0.4, -1.2, 0.05, 0.9, -0.33];

        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 0.3f64);
        for (t, &g) in grads.iter().enumerate() {
            adam_step(&mut [&mut p], &[&[g]], &mut state, alpha, mu);

            m = mu * m + (1.0 - mu) * g;
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * g * g;
            let t = (t + 1) as i32;
            x -= alpha * (m / (1.0 - mu.powi(t))) / ((v / (1.0 - ADAM_BETA2.powi(t))).sqrt() + ADAM_EPSILON);
            assert_eq!(p[0], x, "bitwise agreement with the reference recurrence");
        }
    }
}
