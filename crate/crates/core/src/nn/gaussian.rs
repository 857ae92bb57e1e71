//! State-independent diagonal Gaussian policy head.

use rand::Rng;
use rand_distr::StandardNormal;

pub const LOG_STD_MIN: f32 = -4.0;
pub const LOG_STD_MAX: f32 = 1.0;

const HALF_LOG_TWO_PI: f32 = 0.918_938_5;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHead {
    log_std: Vec<f32>,
}

impl GaussianHead {
    pub fn new(dim: usize, init_log_std: f32) -> GaussianHead {
        GaussianHead { log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); dim] }
    }

    pub fn from_log_std(log_std: Vec<f32>) -> GaussianHead {
        let mut h = GaussianHead { log_std };
        h.clamp();
        h
    }

    pub fn dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[f32] {
        &self.log_std
    }

    pub fn log_std_mut(&mut self) -> &mut [f32] {
        &mut self.log_std
    }

    /// Re-impose the `[LOG_STD_MIN, LOG_STD_MAX]` bounds after an update.
    pub fn clamp(&mut self) {
        for l in &mut self.log_std {
            *l = l.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn std(&self) -> Vec<f32> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub fn sample(&self, mean: &[f32], rng: &mut impl Rng) -> Vec<f32> {
        mean.iter()
            .zip(&self.log_std)
            .map(|(m, l)| {
                let z: f32 = rng.sample(StandardNormal);
                m + l.exp() * z
            })
            .collect()
    }

    pub fn log_prob(&self, mean: &[f32], action: &[f32]) -> f32 {
        mean.iter()
            .zip(action)
            .zip(&self.log_std)
            .map(|((m, a), l)| {
                let z = (a - m) * (-l).exp();
                -0.5 * z * z - l - HALF_LOG_TWO_PI
            })
            .sum()
    }

    /// `Σ (log σ + ½ log 2πe)`.
    pub fn entropy(&self) -> f32 {
        self.log_std.iter().map(|l| l + HALF_LOG_TWO_PI + 0.5).sum()
    }

    /// Gradients of `log_prob` with respect to the mean and `log σ`.
    pub fn log_prob_grads(&self, mean: &[f32], action: &[f32], d_mean: &mut [f32], d_log_std: &mut [f32]) {
        for i in 0..mean.len() {
            let inv_var = (-2.0 * self.log_std[i]).exp();
            let diff = action[i] - mean[i];
            d_mean[i] = diff * inv_var;
            d_log_std[i] = diff * diff * inv_var - 1.0;
        }
    }
}
