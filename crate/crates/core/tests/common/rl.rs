use hfplp::trainer::{ppo_update, Actor, Critic, PpoConfig, PpoOptimizer, RolloutBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Advantages by explicit double sum: A_t = Σ_{l≥0} (γλ)^l δ_{t+l}, cut at the first done.
pub fn gae_oracle(r: &[f64], v: &[f64], d: &[bool], bootstrap: f64, g: f64, lam: f64) -> Vec<f64> {
    let n = r.len();
    let next_v = |t: usize| if t + 1 < n { v[t + 1] } else { bootstrap };
    let delta: Vec<f64> = (0..n).map(|t| r[t] + g * next_v(t) * if d[t] { 0.0 } else { 1.0 } - v[t]).collect();
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            let mut w = 1.0;
            for s in t..n {
                sum += w * delta[s];
                if d[s] {
                    break;
                }
                w *= g * lam;
            }
            sum
        })
        .collect()
}

/// Probability a 1-D Gaussian places on the sign of the better arm.
fn mass_on(mean: f64, std: f64, positive: bool) -> f64 {
    let z = mean / (std * std::f64::consts::SQRT_2);
    let p = 0.5 * (1.0 + erf(z));
    if positive {
        p
    } else {
        1.0 - p
    }
}

// Abramowitz-Stegun 7.1.26, |error| < 1.5e-7
fn erf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t + 0.254829592) * t * (-x * x).exp();
    y.copysign(x)
}

/// Two one-step states; in state 0 the positive arm pays 1, in state 1 the
/// negative arm does. Returns the smallest optimal-arm mass over both states
/// after each iteration.
pub fn bandit_run(iterations: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = Actor::new(2, &[16, 16, 16], 1, -0.7, &mut rng);
    let mut critic = Critic::new(2, &[16, 16, 16], &mut rng);
    let cfg = PpoConfig { learning_rate: 3e-3, entropy_coef: 0.0, ..PpoConfig::default() };
    let mut opt = PpoOptimizer::new(&actor, &critic, cfg.learning_rate);
    let obs = [[1.0f32, 0.0], [0.0, 1.0]];
    let mut history = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut buf = RolloutBuffer::new(2, 2, 1);
        for _ in 0..64 {
            let s = rng.gen_range(0..2);
            let m = actor.means(&obs[s], 1).unwrap();
            let a = actor.head.sample(&m, &mut rng);
            let lp = actor.head.log_prob(&m, &a);
            let v = critic.values(&obs[s], 1).unwrap()[0] as f64;
            let good = (a[0] > 0.0) == (s == 0);
            buf.push(&obs[s], &obs[s], &a, lp, v, if good { 1.0 } else { 0.0 }, true);
        }
        buf.finish(64, &[0.0; 64], cfg.discount, cfg.gae_lambda);
        ppo_update(&mut actor, &mut critic, &mut opt, &buf, &cfg, &mut rng).unwrap();
        let std = actor.head.std()[0] as f64;
        let m0 = actor.means(&obs[0], 1).unwrap()[0] as f64;
        let m1 = actor.means(&obs[1], 1).unwrap()[0] as f64;
        history.push(mass_on(m0, std, true).min(mass_on(m1, std, false)));
    }
    history
}
