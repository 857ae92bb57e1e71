use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::Vec2;
use crate::env::{Action, ActionMode, Randomization, RewardBreakdown, SimParams, Termination, VecEnv};
use crate::nn::AdamState;
use crate::observation::{scale_obs, DAAC_OBS_DIM, HISTORY_DIM, HYBRID_ACTION_DIM, OBS_DIM, POSITION_ACTION_DIM};
use crate::observer::ObserverTargets;
use crate::par::Execution;

use super::checkpoint::{save_checkpoint, Checkpoint};
use super::inference::{critic_row, daac_row, raw_action, scaled_frames, scaled_histories};
use super::observer_fit::{fit_observer, observer_mse, ObserverOptimizer, ObserverSamples};
use super::policy::{PolicyStack, DAAC_CRITIC_DIM, HFPLP_CRITIC_DIM};
use super::ppo::{ppo_update, LossStats, PpoOptimizer, RolloutBuffer};
use super::{PpoConfig, TrainError};

/// Inputs shared by both training stages.
#[derive(Clone, Debug)]
pub struct TrainSetup {
    pub sim: SimParams,
    pub ppo: PpoConfig,
    pub seed: u64,
    pub exec: Execution,
    /// Configuration text embedded in every checkpoint.
    pub config_text: String,
    pub out_dir: PathBuf,
    pub checkpoint_every: usize,
}

/// One line of the training log.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Mean per-step reward over the rollout.
    pub mean_reward: f64,
    pub reward_terms: RewardBreakdown,
    pub episodes: usize,
    pub episode_reward: Option<f64>,
    pub episode_tracking_error: Option<f64>,
    pub fall_fraction: Option<f64>,
    pub losses: LossStats,
    pub observer_mse: Option<f64>,
    pub observer_val_mse: Option<f64>,
    pub action_std: f64,
}

#[derive(Serialize)]
struct TimingRecord {
    iteration: usize,
    wall_time_s: f64,
}

/// Writes the iteration log and, separately, wall-clock timings so the log
/// itself is reproducible byte for byte.
struct RunLog {
    log: BufWriter<File>,
    timing: BufWriter<File>,
    start: Instant,
}

impl RunLog {
    fn open(dir: &Path, name: &str, append: bool) -> Result<RunLog, TrainError> {
        std::fs::create_dir_all(dir).map_err(|e| TrainError::io(dir, e))?;
        let open = |p: PathBuf| {
            std::fs::OpenOptions::new()
                .create(true)
                .write(true)
                .append(append)
                .truncate(!append)
                .open(&p)
                .map_err(|e| TrainError::io(&p, e))
        };
        Ok(RunLog {
            log: BufWriter::new(open(dir.join(format!("{name}_log.jsonl")))?),
            timing: BufWriter::new(open(dir.join(format!("{name}_timing.jsonl")))?),
            start: Instant::now(),
        })
    }

    fn write(&mut self, rec: &IterationRecord) -> Result<(), TrainError> {
        let line = serde_json::to_string(rec).map_err(|e| TrainError::InvalidInput(e.to_string()))?;
        writeln!(self.log, "{line}").map_err(|e| TrainError::Io(e.to_string()))?;
        self.log.flush().map_err(|e| TrainError::Io(e.to_string()))?;
        let t = TimingRecord { iteration: rec.iteration, wall_time_s: self.start.elapsed().as_secs_f64() };
        let line = serde_json::to_string(&t).map_err(|e| TrainError::InvalidInput(e.to_string()))?;
        writeln!(self.timing, "{line}").map_err(|e| TrainError::Io(e.to_string()))?;
        self.timing.flush().map_err(|e| TrainError::Io(e.to_string()))
    }
}

/// Seeds for everything that is not an environment stream.
fn trainer_rng(seed: u64, start_iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - start_iteration as u64);
    rng
}

fn env_seed(seed: u64, start_iteration: usize) -> u64 {
    seed.wrapping_add((start_iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Default)]
struct RolloutTally {
    reward_sum: f64,
    steps: usize,
    terms: [f64; 8],
    episodes: usize,
    episode_reward: f64,
    episode_error: f64,
    falls: usize,
}

impl RolloutTally {
    fn add_step(&mut self, reward: f64, b: &RewardBreakdown) {
        self.reward_sum += reward;
        self.steps += 1;
        for (t, v) in self.terms.iter_mut().zip(b.values()) {
            *t += v;
        }
    }

    fn add_episode(&mut self, s: &crate::env::EpisodeSummary) {
        self.episodes += 1;
        self.episode_reward += s.total_reward;
        self.episode_error += s.tracking_error;
        if s.termination == Termination::Fall {
            self.falls += 1;
        }
    }

    fn record(&self, iteration: usize, losses: LossStats, action_std: f64) -> IterationRecord {
        let n = self.steps.max(1) as f64;
        let t = self.terms.map(|v| v / n);
        let e = self.episodes as f64;
        let per_episode = |v: f64| (self.episodes > 0).then(|| v / e);
        IterationRecord {
            iteration,
            mean_reward: self.reward_sum / n,
            reward_terms: RewardBreakdown {
                velocity_tracking: t[0],
                vertical_velocity: t[1],
                pitch_rate: t[2],
                orientation: t[3],
                torque: t[4],
                action_rate: t[5],
                base_height: t[6],
                joint_tracking: t[7],
            },
            episodes: self.episodes,
            episode_reward: per_episode(self.episode_reward),
            episode_tracking_error: per_episode(self.episode_error),
            fall_fraction: per_episode(self.falls as f64),
            losses,
            observer_mse: None,
            observer_val_mse: None,
            action_std,
        }
    }
}

fn sample_rows(head: &crate::nn::GaussianHead, means: &[f32], k: usize, rng: &mut impl Rng) -> (Vec<f32>, Vec<f32>) {
    let n = means.len() / k;
    let mut actions = Vec::with_capacity(means.len());
    let mut logp = Vec::with_capacity(n);
    for i in 0..n {
        let m = &means[i * k..(i + 1) * k];
        let a = head.sample(m, rng);
        logp.push(head.log_prob(m, &a));
        actions.extend_from_slice(&a);
    }
    (actions, logp)
}

fn progress(name: &str, rec: &IterationRecord) {
    if rec.iteration.is_multiple_of(10) || rec.iteration == 1 {
        log::info!(
            "{name} iteration {}: mean reward {:.4}, episode tracking error {}, observer val mse {}",
            rec.iteration,
            rec.mean_reward,
            rec.episode_tracking_error.map_or("-".into(), |v| format!("{v:.3}")),
            rec.observer_val_mse.map_or("-".into(), |v| format!("{v:.4}")),
        );
    }
}

fn mean_std(head: &crate::nn::GaussianHead) -> f64 {
    head.std().iter().map(|s| *s as f64).sum::<f64>() / head.dim() as f64
}

/// Result of a training stage.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub records: Vec<IterationRecord>,
    pub checkpoint_path: PathBuf,
}

/// First stage: the locomotion policy (hybrid or position-only) with an
/// asymmetric critic, on undisturbed flat ground.
pub fn train_stage1(setup: &TrainSetup, mode: ActionMode, resume: Option<Checkpoint>) -> Result<TrainOutcome, TrainError> {
    train_stage1_with(setup, mode, resume, Randomization::none(), "stage1")
}

/// First-stage pipeline with an explicit episode randomization; with
/// disturbances on this is the fine-tuned first-stage baseline.
pub fn train_stage1_with(
    setup: &TrainSetup,
    mode: ActionMode,
    resume: Option<Checkpoint>,
    randomization: Randomization,
    name: &str,
) -> Result<TrainOutcome, TrainError> {
    setup.ppo.validate().map_err(TrainError::InvalidConfig)?;
    setup.sim.validate().map_err(TrainError::InvalidConfig)?;
    let cfg = &setup.ppo;
    let (mut stack, mut opt, start) = match resume {
        Some(ck) => {
            if ck.stack.mode != mode || ck.stack.daac.is_some() {
                return Err(TrainError::InvalidInput("resume checkpoint does not match the first-stage architecture".into()));
            }
            let opt = restore_ppo(&ck.optimizers, "hfplp", &ck.stack.hfplp_actor, &ck.stack.hfplp_critic, cfg.learning_rate)?;
            (ck.stack, opt, ck.iteration)
        }
        None => {
            let mut init_rng = trainer_rng(setup.seed, usize::MAX);
            let stack = PolicyStack::new_stage1(mode, cfg.init_log_std as f32, &mut init_rng);
            let opt = PpoOptimizer::new(&stack.hfplp_actor, &stack.hfplp_critic, cfg.learning_rate);
            (stack, opt, 0)
        }
    };
    let mut rng = trainer_rng(setup.seed, start);
    let mut venv = VecEnv::new(&setup.sim, mode, cfg.num_envs, env_seed(setup.seed, start), setup.exec)?;
    venv.set_randomization(randomization);
    venv.reset_all();
    let mut log = RunLog::open(&setup.out_dir, name, start > 0)?;
    let ckpt_path = setup.out_dir.join(format!("{name}.ckpt"));
    let k = mode.dim();
    let n = cfg.num_envs;
    let clip = setup.sim.env.raw_action_clip;
    let mut buf = RolloutBuffer::new(HISTORY_DIM, HFPLP_CRITIC_DIM, k);
    let mut records = Vec::new();
    let mut checkpoint = None;
    for iteration in start + 1..=cfg.iterations {
        buf.clear();
        let mut tally = RolloutTally::default();
        for _ in 0..cfg.horizon {
            let hist = scaled_histories(venv.envs());
            let frames = scaled_frames(venv.envs());
            let mut cobs = Vec::with_capacity(n * HFPLP_CRITIC_DIM);
            for (i, e) in venv.envs().iter().enumerate() {
                critic_row(&frames[i * OBS_DIM..(i + 1) * OBS_DIM], &e.privileged(), &mut cobs);
            }
            let means = stack.hfplp_actor.means(&hist, n)?;
            let (acts, logp) = sample_rows(&stack.hfplp_actor.head, &means, k, &mut rng);
            let values = stack.hfplp_critic.values(&cobs, n)?;
            let actions: Vec<Action> = (0..n)
                .map(|i| Action { policy: raw_action(mode, &acts[i * k..(i + 1) * k], clip).map(|v| v as f64), compensation: None })
                .collect();
            let outcomes = venv.step(&actions)?;
            let rewards = bootstrap_timeouts(&outcomes, cfg.discount, |rows, count| {
                Ok(stack.hfplp_critic.values(rows, count)?)
            })?;
            for (i, (o, summary)) in outcomes.iter().enumerate() {
                tally.add_step(o.reward, &o.breakdown);
                if let Some(s) = summary {
                    tally.add_episode(s);
                }
                buf.push(
                    &hist[i * HISTORY_DIM..(i + 1) * HISTORY_DIM],
                    &cobs[i * HFPLP_CRITIC_DIM..(i + 1) * HFPLP_CRITIC_DIM],
                    &acts[i * k..(i + 1) * k],
                    logp[i],
                    values[i] as f64,
                    rewards[i],
                    o.termination.is_done(),
                );
            }
        }
        let frames = scaled_frames(venv.envs());
        let mut cobs = Vec::with_capacity(n * HFPLP_CRITIC_DIM);
        for (i, e) in venv.envs().iter().enumerate() {
            critic_row(&frames[i * OBS_DIM..(i + 1) * OBS_DIM], &e.privileged(), &mut cobs);
        }
        let boot: Vec<f64> = stack.hfplp_critic.values(&cobs, n)?.iter().map(|v| *v as f64).collect();
        buf.finish(n, &boot, cfg.discount, cfg.gae_lambda);
        let losses = ppo_update(&mut stack.hfplp_actor, &mut stack.hfplp_critic, &mut opt, &buf, cfg, &mut rng)
            .map_err(|e| with_rollback(e, &ckpt_path))?;
        let rec = tally.record(iteration, losses, mean_std(&stack.hfplp_actor.head));
        progress(name, &rec);
        log.write(&rec)?;
        records.push(rec);
        if iteration % setup.checkpoint_every.max(1) == 0 || iteration == cfg.iterations {
            let ck = Checkpoint {
                stack: stack.clone(),
                iteration,
                optimizers: ppo_states("hfplp", &opt),
                config_text: setup.config_text.clone(),
            };
            save_checkpoint(&ckpt_path, &ck)?;
            checkpoint = Some(ck);
        }
    }
    let checkpoint = checkpoint.unwrap_or(Checkpoint {
        iteration: start,
        optimizers: ppo_states("hfplp", &opt),
        config_text: setup.config_text.clone(),
        stack,
    });
    if !ckpt_path.exists() {
        save_checkpoint(&ckpt_path, &checkpoint)?;
    }
    Ok(TrainOutcome { checkpoint, records, checkpoint_path: ckpt_path })
}

/// Second stage: the first-stage policy is frozen; the compensation policy
/// is trained by PPO on composed commands while the learned observer is
/// regressed on the same rollouts.
pub fn train_stage2(
    setup: &TrainSetup,
    stage1: &Checkpoint,
    use_observer: bool,
    resume: Option<Checkpoint>,
) -> Result<TrainOutcome, TrainError> {
    setup.ppo.validate().map_err(TrainError::InvalidConfig)?;
    setup.sim.validate().map_err(TrainError::InvalidConfig)?;
    if stage1.stack.mode != ActionMode::Hybrid {
        return Err(TrainError::InvalidInput("the compensation stage needs a hybrid first-stage checkpoint".into()));
    }
    let cfg = &setup.ppo;
    let name = if use_observer { "stage2" } else { "stage2_no_observer" };
    let (mut stack, mut opt, mut obs_opt, start) = match resume {
        Some(ck) => {
            let d = ck.stack.daac.as_ref().ok_or_else(|| TrainError::InvalidInput("resume checkpoint has no second stage".into()))?;
            if d.use_observer != use_observer {
                return Err(TrainError::InvalidInput("resume checkpoint was trained with the other observer setting".into()));
            }
            let opt = restore_ppo(&ck.optimizers, "daac", &d.actor, &d.critic, cfg.learning_rate)?;
            let obs_opt = ObserverOptimizer {
                net1: find_state(&ck.optimizers, "observer_net1", d.observer.net1.param_count(), cfg.observer_learning_rate)?,
                net2: find_state(&ck.optimizers, "observer_net2", d.observer.net2.param_count(), cfg.observer_learning_rate)?,
            };
            (ck.stack.clone(), opt, obs_opt, ck.iteration)
        }
        None => {
            let mut init_rng = trainer_rng(setup.seed, usize::MAX - 1);
            let stack = stage1.stack.clone().with_daac(cfg.init_log_std as f32, use_observer, &mut init_rng);
            let d = stack.daac.as_ref().expect("daac");
            let opt = PpoOptimizer::new(&d.actor, &d.critic, cfg.learning_rate);
            let obs_opt = ObserverOptimizer::new(&d.observer, cfg.observer_learning_rate);
            (stack, opt, obs_opt, 0)
        }
    };
    let frozen = stage1.stack.hfplp_checksum();
    if stack.hfplp_checksum() != frozen {
        return Err(TrainError::ChecksumMismatch { component: "hfplp".into() });
    }
    let mut rng = trainer_rng(setup.seed ^ 0x5eed_0002, start);
    let mut venv = VecEnv::new(&setup.sim, ActionMode::Hybrid, cfg.num_envs, env_seed(setup.seed ^ 0x5eed_0002, start), setup.exec)?;
    venv.set_randomization(Randomization {
        disturbance_probability: setup.sim.env.disturbance_probability,
        payload_probability: setup.sim.env.payload_probability,
    });
    venv.reset_all();
    let mut log = RunLog::open(&setup.out_dir, name, start > 0)?;
    let ckpt_path = setup.out_dir.join(format!("{name}.ckpt"));
    let n = cfg.num_envs;
    let k = POSITION_ACTION_DIM;
    let holdout_from = n - cfg.observer_holdout_envs;
    let clip = setup.sim.env.raw_action_clip;
    let mut buf = RolloutBuffer::new(DAAC_OBS_DIM, DAAC_CRITIC_DIM, k);
    let mut pending: Vec<Option<ObserverTargets>> = vec![None; n];
    let mut records = Vec::new();
    let mut checkpoint = None;
    for iteration in start + 1..=cfg.iterations {
        buf.clear();
        let mut train_samples = ObserverSamples::default();
        let mut val_samples = ObserverSamples::default();
        let mut tally = RolloutTally::default();
        for _ in 0..cfg.horizon {
            let d = stack.daac.as_ref().expect("daac");
            let hist = scaled_histories(venv.envs());
            let frames = scaled_frames(venv.envs());
            for (i, t) in pending.iter_mut().enumerate() {
                if let Some(t) = t.take() {
                    let dst = if i >= holdout_from { &mut val_samples } else { &mut train_samples };
                    dst.push(&hist[i * HISTORY_DIM..(i + 1) * HISTORY_DIM], &frames[i * OBS_DIM..(i + 1) * OBS_DIM], &t);
                }
            }
            let hfp_means = stack.hfplp_actor.means(&hist, n)?;
            let f_est: Vec<Vec2> = if d.use_observer {
                let (_, o2) = d.observer.forward_batch(&hist, &frames, n).map_err(|e| TrainError::InvalidInput(e.to_string()))?;
                (0..n)
                    .map(|i| {
                        let e = crate::observer::estimate_from_normalized(&[0.0; crate::observer::NET1_OUT], &o2[i * 2..i * 2 + 2]);
                        Vec2::new(e.f_ext[0], e.f_ext[1])
                    })
                    .collect()
            } else {
                vec![Vec2::zeros(); n]
            };
            let mut aobs = Vec::with_capacity(n * DAAC_OBS_DIM);
            let mut cobs = Vec::with_capacity(n * DAAC_CRITIC_DIM);
            let mut hfp = Vec::with_capacity(n);
            for (i, e) in venv.envs().iter().enumerate() {
                let a: [f32; HYBRID_ACTION_DIM] = raw_action(ActionMode::Hybrid, &hfp_means[i * 8..(i + 1) * 8], clip);
                let start_row = aobs.len();
                daac_row(&frames[i * OBS_DIM..(i + 1) * OBS_DIM], &f_est[i], &a, &mut aobs);
                critic_row(&aobs[start_row..], &e.privileged(), &mut cobs);
                hfp.push(a);
            }
            let means = d.actor.means(&aobs, n)?;
            let (acts, logp) = sample_rows(&d.actor.head, &means, k, &mut rng);
            let values = d.critic.values(&cobs, n)?;
            let actions: Vec<Action> = (0..n)
                .map(|i| Action {
                    policy: hfp[i].map(|v| v as f64),
                    compensation: Some(std::array::from_fn(|j| acts[i * k + j] as f64)),
                })
                .collect();
            let outcomes = venv.step(&actions)?;
            // terminal rows for timeouts reuse the compensation input layout
            let rewards = bootstrap_timeouts_daac(&outcomes, &aobs, cfg.discount, |rows, count| Ok(d.critic.values(rows, count)?))?;
            for (i, (o, summary)) in outcomes.iter().enumerate() {
                tally.add_step(o.reward, &o.breakdown);
                if let Some(s) = summary {
                    tally.add_episode(s);
                }
                if !o.termination.is_done() {
                    pending[i] = Some(o.info.targets);
                }
                buf.push(
                    &aobs[i * DAAC_OBS_DIM..(i + 1) * DAAC_OBS_DIM],
                    &cobs[i * DAAC_CRITIC_DIM..(i + 1) * DAAC_CRITIC_DIM],
                    &acts[i * k..(i + 1) * k],
                    logp[i],
                    values[i] as f64,
                    rewards[i],
                    o.termination.is_done(),
                );
            }
        }
        let boot = {
            let d = stack.daac.as_ref().expect("daac");
            let hist = scaled_histories(venv.envs());
            let frames = scaled_frames(venv.envs());
            let hfp_means = stack.hfplp_actor.means(&hist, n)?;
            let f_est: Vec<Vec2> = if d.use_observer {
                let (_, o2) = d.observer.forward_batch(&hist, &frames, n).map_err(|e| TrainError::InvalidInput(e.to_string()))?;
                (0..n).map(|i| Vec2::new(o2[2 * i] as f64 * 100.0, o2[2 * i + 1] as f64 * 100.0)).collect()
            } else {
                vec![Vec2::zeros(); n]
            };
            let mut cobs = Vec::with_capacity(n * DAAC_CRITIC_DIM);
            for (i, e) in venv.envs().iter().enumerate() {
                let a = raw_action(ActionMode::Hybrid, &hfp_means[i * 8..(i + 1) * 8], clip);
                let mut row = Vec::with_capacity(DAAC_OBS_DIM);
                daac_row(&frames[i * OBS_DIM..(i + 1) * OBS_DIM], &f_est[i], &a, &mut row);
                critic_row(&row, &e.privileged(), &mut cobs);
            }
            d.critic.values(&cobs, n)?.iter().map(|v| *v as f64).collect::<Vec<_>>()
        };
        buf.finish(n, &boot, cfg.discount, cfg.gae_lambda);
        let d = stack.daac.as_mut().expect("daac");
        let losses =
            ppo_update(&mut d.actor, &mut d.critic, &mut opt, &buf, cfg, &mut rng).map_err(|e| with_rollback(e, &ckpt_path))?;
        let val_mse = observer_mse(&d.observer, &val_samples)?;
        let train_mse = fit_observer(&mut d.observer, &mut obs_opt, &train_samples, cfg.epochs, cfg.minibatches, cfg.max_grad_norm, &mut rng)?;
        if stack.hfplp_checksum() != frozen {
            return Err(TrainError::ChecksumMismatch { component: "hfplp".into() });
        }
        let d = stack.daac.as_ref().expect("daac");
        let mut rec = tally.record(iteration, losses, mean_std(&d.actor.head));
        rec.observer_mse = Some(train_mse);
        rec.observer_val_mse = Some(val_mse);
        progress(name, &rec);
        log.write(&rec)?;
        records.push(rec);
        if iteration % setup.checkpoint_every.max(1) == 0 || iteration == cfg.iterations {
            let ck = stage2_checkpoint(&stack, iteration, &opt, &obs_opt, &setup.config_text);
            save_checkpoint(&ckpt_path, &ck)?;
            checkpoint = Some(ck);
        }
    }
    let checkpoint = checkpoint.unwrap_or_else(|| stage2_checkpoint(&stack, start, &opt, &obs_opt, &setup.config_text));
    if !ckpt_path.exists() {
        save_checkpoint(&ckpt_path, &checkpoint)?;
    }
    Ok(TrainOutcome { checkpoint, records, checkpoint_path: ckpt_path })
}

fn stage2_checkpoint(stack: &PolicyStack, iteration: usize, opt: &PpoOptimizer, obs: &ObserverOptimizer, config: &str) -> Checkpoint {
    let mut optimizers = ppo_states("daac", opt);
    optimizers.push(("observer_net1".into(), obs.net1.clone()));
    optimizers.push(("observer_net2".into(), obs.net2.clone()));
    Checkpoint { stack: stack.clone(), iteration, optimizers, config_text: config.to_string() }
}

fn ppo_states(prefix: &str, opt: &PpoOptimizer) -> Vec<(String, AdamState)> {
    vec![
        (format!("{prefix}_actor"), opt.actor.clone()),
        (format!("{prefix}_log_std"), opt.log_std.clone()),
        (format!("{prefix}_critic"), opt.critic.clone()),
    ]
}

fn find_state(states: &[(String, AdamState)], name: &str, len: usize, lr: f64) -> Result<AdamState, TrainError> {
    match states.iter().find(|(n, _)| n == name) {
        Some((_, s)) if s.first.len() == len => Ok(s.clone()),
        Some(_) => Err(TrainError::InvalidInput(format!("optimizer state {name} has the wrong length"))),
        None => Ok(AdamState::new(len, crate::nn::AdamConfig { learning_rate: lr as f32, ..Default::default() })),
    }
}

fn restore_ppo(
    states: &[(String, AdamState)],
    prefix: &str,
    actor: &super::policy::Actor,
    critic: &super::policy::Critic,
    lr: f64,
) -> Result<PpoOptimizer, TrainError> {
    Ok(PpoOptimizer {
        actor: find_state(states, &format!("{prefix}_actor"), actor.net.param_count(), lr)?,
        log_std: find_state(states, &format!("{prefix}_log_std"), actor.head.dim(), lr)?,
        critic: find_state(states, &format!("{prefix}_critic"), critic.net.param_count(), lr)?,
    })
}

fn with_rollback(e: TrainError, path: &Path) -> TrainError {
    match e {
        TrainError::NonFiniteLoss(m) => {
            TrainError::NonFiniteLoss(format!("{m}; parameters restored, last checkpoint at {}", path.display()))
        }
        other => other,
    }
}

type Outcomes = [(crate::env::StepOutcome, Option<crate::env::EpisodeSummary>)];

/// Rewards with `γ·V(terminal)` added on timeouts, which are truncations
/// rather than true terminal states.
fn bootstrap_timeouts(
    outcomes: &Outcomes,
    discount: f64,
    values: impl Fn(&[f32], usize) -> Result<Vec<f32>, TrainError>,
) -> Result<Vec<f64>, TrainError> {
    let mut rewards: Vec<f64> = outcomes.iter().map(|(o, _)| o.reward).collect();
    let timeouts: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].0.termination == Termination::Timeout).collect();
    if timeouts.is_empty() {
        return Ok(rewards);
    }
    let mut rows = Vec::with_capacity(timeouts.len() * HFPLP_CRITIC_DIM);
    for &i in &timeouts {
        let o = &outcomes[i].0;
        critic_row(&scale_obs(&o.frame), &o.privileged, &mut rows);
    }
    let v = values(&rows, timeouts.len())?;
    for (j, &i) in timeouts.iter().enumerate() {
        rewards[i] += discount * v[j] as f64;
    }
    Ok(rewards)
}

/// Timeout bootstrap for the compensation critic; the terminal row keeps the
/// estimate and first-stage action of the step that timed out.
fn bootstrap_timeouts_daac(
    outcomes: &Outcomes,
    aobs: &[f32],
    discount: f64,
    values: impl Fn(&[f32], usize) -> Result<Vec<f32>, TrainError>,
) -> Result<Vec<f64>, TrainError> {
    let mut rewards: Vec<f64> = outcomes.iter().map(|(o, _)| o.reward).collect();
    let timeouts: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].0.termination == Termination::Timeout).collect();
    if timeouts.is_empty() {
        return Ok(rewards);
    }
    let mut rows = Vec::with_capacity(timeouts.len() * DAAC_CRITIC_DIM);
    for &i in &timeouts {
        let o = &outcomes[i].0;
        let mut row = scale_obs(&o.frame).to_vec();
        row.extend_from_slice(&aobs[i * DAAC_OBS_DIM + OBS_DIM..(i + 1) * DAAC_OBS_DIM]);
        critic_row(&row, &o.privileged, &mut rows);
    }
    let v = values(&rows, timeouts.len())?;
    for (j, &i) in timeouts.iter().enumerate() {
        rewards[i] += discount * v[j] as f64;
    }
    Ok(rewards)
}
