use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::nn::{clip_grad_norm, AdamConfig, AdamState};

use super::policy::{Actor, Critic};
use super::{PpoConfig, TrainError};

/// Flattened rollout data for one policy, row-major per sample.
#[derive(Clone, Debug, Default)]
pub struct RolloutBuffer {
    pub actor_dim: usize,
    pub critic_dim: usize,
    pub action_dim: usize,
    pub actor_obs: Vec<f32>,
    pub critic_obs: Vec<f32>,
    pub actions: Vec<f32>,
    pub log_probs: Vec<f32>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(actor_dim: usize, critic_dim: usize, action_dim: usize) -> RolloutBuffer {
        RolloutBuffer { actor_dim, critic_dim, action_dim, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn clear(&mut self) {
        let (a, c, d) = (self.actor_dim, self.critic_dim, self.action_dim);
        *self = RolloutBuffer::new(a, c, d);
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, actor_obs: &[f32], critic_obs: &[f32], action: &[f32], log_prob: f32, value: f64, reward: f64, done: bool) {
        debug_assert_eq!(actor_obs.len(), self.actor_dim);
        debug_assert_eq!(critic_obs.len(), self.critic_dim);
        debug_assert_eq!(action.len(), self.action_dim);
        self.actor_obs.extend_from_slice(actor_obs);
        self.critic_obs.extend_from_slice(critic_obs);
        self.actions.extend_from_slice(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    /// Advantages and returns for a buffer filled step-major
    /// (`index = step · envs + env`), with per-environment bootstrap values.
    pub fn finish(&mut self, envs: usize, bootstrap: &[f64], discount: f64, lambda: f64) {
        assert_eq!(bootstrap.len(), envs);
        assert_eq!(self.len() % envs, 0, "rectangular buffer");
        let steps = self.len() / envs;
        self.advantages = vec![0.0; self.len()];
        self.returns = vec![0.0; self.len()];
        for e in 0..envs {
            let idx: Vec<usize> = (0..steps).map(|t| t * envs + e).collect();
            let r: Vec<f64> = idx.iter().map(|&i| self.rewards[i]).collect();
            let v: Vec<f64> = idx.iter().map(|&i| self.values[i]).collect();
            let d: Vec<bool> = idx.iter().map(|&i| self.dones[i]).collect();
            let (adv, ret) = super::compute_gae(&r, &v, &d, bootstrap[e], discount, lambda);
            for (k, &i) in idx.iter().enumerate() {
                self.advantages[i] = adv[k];
                self.returns[i] = ret[k];
            }
        }
    }
}

/// Adam moments for an actor-critic pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoOptimizer {
    pub actor: AdamState,
    pub log_std: AdamState,
    pub critic: AdamState,
}

impl PpoOptimizer {
    pub fn new(actor: &Actor, critic: &Critic, learning_rate: f64) -> PpoOptimizer {
        let c = AdamConfig { learning_rate: learning_rate as f32, ..AdamConfig::default() };
        PpoOptimizer {
            actor: AdamState::new(actor.net.param_count(), c),
            log_std: AdamState::new(actor.head.dim(), c),
            critic: AdamState::new(critic.net.param_count(), c),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Clipped-surrogate PPO over `epochs` passes of shuffled minibatches.
/// Advantages are normalized over the whole buffer first. On a non-finite
/// loss or gradient every parameter and optimizer moment is restored.
pub fn ppo_update(
    actor: &mut Actor,
    critic: &mut Critic,
    opt: &mut PpoOptimizer,
    buf: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<LossStats, TrainError> {
    let n = buf.len();
    if n == 0 || buf.advantages.len() != n {
        return Err(TrainError::InvalidInput("rollout buffer is empty or has no advantages".into()));
    }
    let snapshot = (actor.clone(), critic.clone(), opt.clone());
    match update_inner(actor, critic, opt, buf, cfg, rng) {
        Ok(s) => Ok(s),
        Err(e) => {
            (*actor, *critic, *opt) = snapshot;
            Err(e)
        }
    }
}

fn update_inner(
    actor: &mut Actor,
    critic: &mut Critic,
    opt: &mut PpoOptimizer,
    buf: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut impl Rng,
) -> Result<LossStats, TrainError> {
    let n = buf.len();
    let mean = buf.advantages.iter().sum::<f64>() / n as f64;
    let var = buf.advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt() + 1e-8;
    let adv: Vec<f64> = buf.advantages.iter().map(|a| (a - mean) / std).collect();

    let (ad, cd, k) = (buf.actor_dim, buf.critic_dim, buf.action_dim);
    let clip = cfg.clip_ratio;
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = LossStats::default();
    let mut updates = 0usize;
    let mut actor_grads = vec![0.0f32; actor.net.param_count()];
    let mut std_grads = vec![0.0f32; k];
    let mut critic_grads = vec![0.0f32; critic.net.param_count()];
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in split(&order, cfg.minibatches) {
            let b = chunk.len();
            let gather = |src: &[f32], dim: usize| -> Vec<f32> {
                let mut out = Vec::with_capacity(b * dim);
                for &i in chunk {
                    out.extend_from_slice(&src[i * dim..(i + 1) * dim]);
                }
                out
            };
            let obs = gather(&buf.actor_obs, ad);
            let cobs = gather(&buf.critic_obs, cd);
            let actions = gather(&buf.actions, k);

            let cache = actor.net.forward_batch(&obs, b)?;
            let means = cache.output();
            let ccache = critic.net.forward_batch(&cobs, b)?;
            let values = ccache.output();

            actor_grads.fill(0.0);
            std_grads.fill(0.0);
            critic_grads.fill(0.0);
            let mut d_mean = vec![0.0f32; b * k];
            let mut d_value = vec![0.0f32; b];
            let (mut pl, mut vl, mut kl, mut clipped) = (0.0f64, 0.0f64, 0.0f64, 0usize);
            let mut g_mu = vec![0.0f32; k];
            let mut g_ls = vec![0.0f32; k];
            for (r, &i) in chunk.iter().enumerate() {
                let m = &means[r * k..(r + 1) * k];
                let a = &actions[r * k..(r + 1) * k];
                let logp = actor.head.log_prob(m, a) as f64;
                let log_ratio = logp - buf.log_probs[i] as f64;
                let ratio = log_ratio.exp();
                let a_i = adv[i];
                let unclipped = ratio * a_i;
                let clipped_obj = ratio.clamp(1.0 - clip, 1.0 + clip) * a_i;
                pl -= unclipped.min(clipped_obj);
                kl += (ratio - 1.0) - log_ratio;
                if (ratio - 1.0).abs() > clip {
                    clipped += 1;
                }
                // gradient flows only where the unclipped term is the minimum
                let active = !((a_i >= 0.0 && ratio > 1.0 + clip) || (a_i < 0.0 && ratio < 1.0 - clip));
                if active {
                    let coeff = (-a_i * ratio / b as f64) as f32;
                    actor.head.log_prob_grads(m, a, &mut g_mu, &mut g_ls);
                    for j in 0..k {
                        d_mean[r * k + j] = coeff * g_mu[j];
                        std_grads[j] += coeff * g_ls[j];
                    }
                }
                let err = values[r] as f64 - buf.returns[i];
                vl += err * err;
                d_value[r] = (2.0 * cfg.value_coef * err / b as f64) as f32;
            }
            pl /= b as f64;
            vl /= b as f64;
            let entropy = actor.head.entropy() as f64;
            let loss = pl + cfg.value_coef * vl - cfg.entropy_coef * entropy;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss(format!("policy {pl}, value {vl}")));
            }
            for g in &mut std_grads {
                *g -= cfg.entropy_coef as f32;
            }
            actor.net.backward(&cache, &d_mean, &mut actor_grads)?;
            critic.net.backward(&ccache, &d_value, &mut critic_grads)?;
            let norm = clip_grad_norm(&mut [&mut actor_grads[..], &mut std_grads[..], &mut critic_grads[..]], cfg.max_grad_norm as f32);
            if !norm.is_finite() {
                return Err(TrainError::NonFiniteLoss(format!("gradient norm {norm}")));
            }
            opt.actor.step(actor.net.params_mut(), &actor_grads);
            opt.log_std.step(actor.head.log_std_mut(), &std_grads);
            actor.head.clamp();
            opt.critic.step(critic.net.params_mut(), &critic_grads);

            stats.policy_loss += pl;
            stats.value_loss += vl;
            stats.entropy += entropy;
            stats.approx_kl += kl / b as f64;
            stats.clip_fraction += clipped as f64 / b as f64;
            stats.grad_norm += norm as f64;
            updates += 1;
        }
    }
    let u = updates as f64;
    stats.policy_loss /= u;
    stats.value_loss /= u;
    stats.entropy /= u;
    stats.approx_kl /= u;
    stats.clip_fraction /= u;
    stats.grad_norm /= u;
    Ok(stats)
}

/// `parts` contiguous chunks whose sizes differ by at most one.
pub(crate) fn split<T>(items: &[T], parts: usize) -> Vec<&[T]> {
    let parts = parts.clamp(1, items.len().max(1));
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(&items[start..start + len]);
        start += len;
    }
    out
}
