use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 3e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Bias-corrected Adam moments for one parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first: Vec<f32>,
    pub second: Vec<f32>,
    pub steps: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> AdamState {
        AdamState { config, first: vec![0.0; len], second: vec![0.0; len], steps: 0 }
    }

    pub fn step(&mut self, params: &mut [f32], grads: &[f32]) {
        assert_eq!(params.len(), self.first.len(), "parameter length");
        assert_eq!(grads.len(), self.first.len(), "gradient length");
        self.steps += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.steps as i32);
        let bc2 = 1.0 - c.beta2.powi(self.steps as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.first[i] = c.beta1 * self.first[i] + (1.0 - c.beta1) * g;
            self.second[i] = c.beta2 * self.second[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.first[i] / bc1;
            let v_hat = self.second[i] / bc2;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(3, AdamConfig::default());
        s.first = vec![0.0; 3];
        let mut p = vec![1.0, -2.0, 3.0];
        s.step(&mut p, &[0.0; 3]);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { learning_rate: 0.01, ..Default::default() };
        let mut s = AdamState::new(3, cfg);
        let mut p = vec![0.0; 3];
        s.step(&mut p, &[2.5, -0.1, 40.0]);
        assert!((p[0] + 0.01).abs() < 1e-6);
        assert!((p[1] - 0.01).abs() < 1e-6);
        assert!((p[2] + 0.01).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_parabola() {
        let cfg = AdamConfig { learning_rate: 0.05, ..Default::default() };
        let mut s = AdamState::new(1, cfg);
        let mut x = vec![1.0f32];
        for _ in 0..500 {
            let g = 2.0 * x[0];
            s.step(&mut x, &[g]);
        }
        assert!(x[0].abs() < 0.05, "{}", x[0]);
    }
}
