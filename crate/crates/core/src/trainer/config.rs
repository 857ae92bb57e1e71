use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub discount: f64,
    pub gae_lambda: f64,
    pub clip_ratio: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatches: usize,
    /// Control steps collected per environment per iteration.
    pub horizon: usize,
    pub num_envs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub iterations: usize,
    pub init_log_std: f64,
    pub observer_learning_rate: f64,
    /// Environments whose samples only score the observer, never train it.
    pub observer_holdout_envs: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            discount: 0.99,
            gae_lambda: 0.95,
            clip_ratio: 0.2,
            learning_rate: 3e-4,
            epochs: 5,
            minibatches: 4,
            horizon: 24,
            num_envs: 256,
            entropy_coef: 0.005,
            value_coef: 1.0,
            max_grad_norm: 1.0,
            iterations: 1500,
            init_log_std: -0.7,
            observer_learning_rate: 1e-3,
            observer_holdout_envs: 32,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(format!("discount must lie in [0, 1), got {}", self.discount));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(format!("gae_lambda must lie in [0, 1], got {}", self.gae_lambda));
        }
        if !(self.clip_ratio > 0.0) {
            return Err("clip_ratio must be > 0".into());
        }
        if !(self.learning_rate > 0.0) || !(self.observer_learning_rate > 0.0) {
            return Err("learning rates must be > 0".into());
        }
        if self.epochs == 0 || self.minibatches == 0 || self.horizon == 0 || self.num_envs == 0 {
            return Err("epochs, minibatches, horizon and num_envs must be >= 1".into());
        }
        if self.minibatches > self.horizon * self.num_envs {
            return Err("more minibatches than samples".into());
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0 && self.max_grad_norm > 0.0) {
            return Err("loss coefficients must be >= 0 and max_grad_norm > 0".into());
        }
        if !self.init_log_std.is_finite() {
            return Err("init_log_std must be finite".into());
        }
        if self.observer_holdout_envs >= self.num_envs {
            return Err("observer_holdout_envs must leave at least one training environment".into());
        }
        Ok(())
    }
}
