use crate::dynamics::Vec2;
use crate::env::{Action, ActionMode, Quadruped};
use crate::observation::{scale_obs, scale_privileged, FORCE_SCALE, HYBRID_ACTION_DIM, OBS_DIM, PRIVILEGED_DIM};

use super::policy::PolicyStack;
use super::TrainError;

pub fn scaled_histories(envs: &[Quadruped]) -> Vec<f32> {
    envs.iter().flat_map(|e| e.history().scaled()).collect()
}

pub fn scaled_frames(envs: &[Quadruped]) -> Vec<f32> {
    envs.iter().flat_map(|e| scale_obs(e.history().latest())).collect()
}

/// Critic row: scaled frame followed by scaled privileged extras.
pub fn critic_row(policy_obs: &[f32], privileged: &[f64; PRIVILEGED_DIM], out: &mut Vec<f32>) {
    out.extend_from_slice(policy_obs);
    out.extend_from_slice(&scale_privileged(privileged));
}

/// Compensation policy row: scaled frame, scaled force estimate, first-stage action.
pub fn daac_row(frame: &[f32], f_est: &Vec2, hfp_raw: &[f32; HYBRID_ACTION_DIM], out: &mut Vec<f32>) {
    debug_assert_eq!(frame.len(), OBS_DIM);
    out.extend_from_slice(frame);
    out.push(f_est.x as f32 * FORCE_SCALE);
    out.push(f_est.y as f32 * FORCE_SCALE);
    out.extend_from_slice(hfp_raw);
}

/// Pad a policy output to the 8-wide raw action, clipped as the env does.
pub fn raw_action(mode: ActionMode, out: &[f32], clip: f64) -> [f32; HYBRID_ACTION_DIM] {
    let mut a = [0.0f32; HYBRID_ACTION_DIM];
    for (dst, src) in a.iter_mut().zip(out.iter().take(mode.dim())) {
        *dst = src.clamp(-clip as f32, clip as f32);
    }
    a
}

/// What the deterministic controller did at one control step.
#[derive(Clone, Debug)]
pub struct Decision {
    pub actions: Vec<Action>,
    /// Learned external-force estimate in N (zero without an observer).
    pub f_est: Vec<Vec2>,
    /// Compensation policy inputs, row-major.
    pub daac_obs: Vec<f32>,
}

/// Mean actions of the stack for every environment. `compensate` turns the
/// second stage on when the stack has one.
pub fn decide(stack: &PolicyStack, envs: &[Quadruped], compensate: bool) -> Result<Decision, TrainError> {
    let n = envs.len();
    let hist = scaled_histories(envs);
    let means = stack.hfplp_actor.means(&hist, n)?;
    let k = stack.hfplp_actor.action_dim();
    let clip = envs.first().map_or(4.0, |e| e.params().env.raw_action_clip);
    let hfp: Vec<[f32; HYBRID_ACTION_DIM]> = (0..n).map(|i| raw_action(stack.mode, &means[i * k..(i + 1) * k], clip)).collect();
    let mut actions: Vec<Action> =
        hfp.iter().map(|a| Action { policy: a.map(|v| v as f64), compensation: None }).collect();
    let mut f_est = vec![Vec2::zeros(); n];
    let mut daac_obs = Vec::new();
    if let (true, Some(d)) = (compensate, &stack.daac) {
        let frames = scaled_frames(envs);
        if d.use_observer {
            let (_, o2) = d.observer.forward_batch(&hist, &frames, n).map_err(|e| TrainError::InvalidInput(e.to_string()))?;
            for (i, f) in f_est.iter_mut().enumerate() {
                let e = crate::observer::estimate_from_normalized(&[0.0; crate::observer::NET1_OUT], &o2[i * 2..i * 2 + 2]);
                *f = Vec2::new(e.f_ext[0], e.f_ext[1]);
            }
        }
        for i in 0..n {
            daac_row(&frames[i * OBS_DIM..(i + 1) * OBS_DIM], &f_est[i], &hfp[i], &mut daac_obs);
        }
        let comp = d.actor.means(&daac_obs, n)?;
        for (i, a) in actions.iter_mut().enumerate() {
            a.compensation = Some(std::array::from_fn(|j| comp[i * 4 + j] as f64));
        }
    }
    Ok(Decision { actions, f_est, daac_obs })
}
