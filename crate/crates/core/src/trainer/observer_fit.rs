use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::{clip_grad_norm, AdamConfig, AdamState};
use crate::observation::{HISTORY_DIM, OBS_DIM};
use crate::observer::{NeuralObserver, ObserverTargets, NET1_OUT, NET2_OUT};

use super::ppo::split;
use super::TrainError;

/// Supervised samples for the learned observer: scaled inputs and
/// normalized targets.
#[derive(Clone, Debug, Default)]
pub struct ObserverSamples {
    pub history: Vec<f32>,
    pub frame: Vec<f32>,
    pub target1: Vec<f32>,
    pub target2: Vec<f32>,
}

impl ObserverSamples {
    pub fn len(&self) -> usize {
        self.target2.len() / NET2_OUT
    }

    pub fn is_empty(&self) -> bool {
        self.target2.is_empty()
    }

    pub fn push(&mut self, history: &[f32], frame: &[f32], targets: &ObserverTargets) {
        let (t1, t2) = targets.normalized();
        self.history.extend_from_slice(history);
        self.frame.extend_from_slice(frame);
        self.target1.extend_from_slice(&t1);
        self.target2.extend_from_slice(&t2);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverOptimizer {
    pub net1: AdamState,
    pub net2: AdamState,
}

impl ObserverOptimizer {
    pub fn new(obs: &NeuralObserver, learning_rate: f64) -> ObserverOptimizer {
        let c = AdamConfig { learning_rate: learning_rate as f32, ..AdamConfig::default() };
        ObserverOptimizer { net1: AdamState::new(obs.net1.param_count(), c), net2: AdamState::new(obs.net2.param_count(), c) }
    }
}

/// Mean squared error over all nine normalized outputs.
pub fn observer_mse(obs: &NeuralObserver, s: &ObserverSamples) -> Result<f64, TrainError> {
    if s.is_empty() {
        return Ok(0.0);
    }
    let (o1, o2) = obs.forward_batch(&s.history, &s.frame, s.len()).map_err(|e| TrainError::InvalidInput(e.to_string()))?;
    let sq = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(x, y)| ((x - y) as f64).powi(2)).sum::<f64>();
    Ok((sq(&o1, &s.target1) + sq(&o2, &s.target2)) / (s.len() * (NET1_OUT + NET2_OUT)) as f64)
}

/// Minibatch regression of both networks end to end; the second network's
/// loss also reaches the first through its input. Returns the mean training loss.
pub fn fit_observer(
    obs: &mut NeuralObserver,
    opt: &mut ObserverOptimizer,
    s: &ObserverSamples,
    epochs: usize,
    minibatches: usize,
    max_grad_norm: f64,
    rng: &mut impl Rng,
) -> Result<f64, TrainError> {
    let n = s.len();
    if n == 0 {
        return Ok(0.0);
    }
    let snapshot = (obs.clone(), opt.clone());
    let mut order: Vec<usize> = (0..n).collect();
    let mut g1 = vec![0.0f32; obs.net1.param_count()];
    let mut g2 = vec![0.0f32; obs.net2.param_count()];
    let (mut total, mut count) = (0.0, 0usize);
    let denom = (NET1_OUT + NET2_OUT) as f32;
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in split(&order, minibatches) {
            let b = chunk.len();
            let gather = |src: &[f32], dim: usize| -> Vec<f32> {
                let mut out = Vec::with_capacity(b * dim);
                for &i in chunk {
                    out.extend_from_slice(&src[i * dim..(i + 1) * dim]);
                }
                out
            };
            let (h, f) = (gather(&s.history, HISTORY_DIM), gather(&s.frame, OBS_DIM));
            let (t1, t2) = (gather(&s.target1, NET1_OUT), gather(&s.target2, NET2_OUT));
            let c1 = obs.net1.forward_batch(&h, b)?;
            let x2 = NeuralObserver::net2_input(&f, c1.output(), b);
            let c2 = obs.net2.forward_batch(&x2, b)?;
            let scale = 2.0 / (b as f32 * denom);
            let mut d1: Vec<f32> = c1.output().iter().zip(&t1).map(|(o, t)| scale * (o - t)).collect();
            let d2: Vec<f32> = c2.output().iter().zip(&t2).map(|(o, t)| scale * (o - t)).collect();
            let loss = (c1.output().iter().zip(&t1).chain(c2.output().iter().zip(&t2)))
                .map(|(o, t)| ((o - t) as f64).powi(2))
                .sum::<f64>()
                / (b as f64 * denom as f64);
            if !loss.is_finite() {
                (*obs, *opt) = snapshot;
                return Err(TrainError::NonFiniteLoss(format!("observer loss {loss}")));
            }
            g1.fill(0.0);
            g2.fill(0.0);
            let dx2 = obs.net2.backward(&c2, &d2, &mut g2)?;
            let width = OBS_DIM + NET1_OUT;
            for r in 0..b {
                for j in 0..NET1_OUT {
                    d1[r * NET1_OUT + j] += dx2[r * width + OBS_DIM + j];
                }
            }
            obs.net1.backward(&c1, &d1, &mut g1)?;
            let norm = clip_grad_norm(&mut [&mut g1[..], &mut g2[..]], max_grad_norm as f32);
            if !norm.is_finite() {
                (*obs, *opt) = snapshot;
                return Err(TrainError::NonFiniteLoss(format!("observer gradient norm {norm}")));
            }
            opt.net1.step(obs.net1.params_mut(), &g1);
            opt.net2.step(obs.net2.params_mut(), &g2);
            total += loss;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
