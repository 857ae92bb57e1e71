use crate::par::{self, Execution};

use super::quadruped::{Action, ActionMode, Quadruped, Randomization, SimParams, StepOutcome, Termination};
use super::EnvError;

/// Totals for a finished episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub total_reward: f64,
    pub steps: usize,
    pub termination: Termination,
    /// Mean `|v_x − v_cmd|` over the episode.
    pub tracking_error: f64,
}

#[derive(Clone, Debug, Default)]
struct Tally {
    reward: f64,
    abs_error: f64,
}

/// Independent environments stepped together. Finished episodes are reset
/// immediately; the returned outcome still describes the terminal step.
#[derive(Clone, Debug)]
pub struct VecEnv {
    envs: Vec<Quadruped>,
    tallies: Vec<Tally>,
    exec: Execution,
}

impl VecEnv {
    pub fn new(params: &SimParams, mode: ActionMode, count: usize, seed: u64, exec: Execution) -> Result<VecEnv, EnvError> {
        let envs = (0..count)
            .map(|i| Quadruped::new(params.clone(), mode, seed, i as u64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VecEnv { tallies: vec![Tally::default(); envs.len()], envs, exec })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[Quadruped] {
        &self.envs
    }

    pub fn envs_mut(&mut self) -> &mut [Quadruped] {
        &mut self.envs
    }

    /// Applies to subsequent resets; call [`VecEnv::reset_all`] to apply now.
    pub fn set_randomization(&mut self, r: Randomization) {
        self.envs.iter_mut().for_each(|e| e.set_randomization(r));
    }

    pub fn enable_gm_observer(&mut self, on: bool) {
        self.envs.iter_mut().for_each(|e| e.enable_gm_observer(on));
    }

    pub fn reset_all(&mut self) {
        par::for_each_mut(self.exec, &mut self.envs, |_, e| {
            e.reset();
        });
        self.tallies.iter_mut().for_each(|t| *t = Tally::default());
    }

    /// Step every environment. A numerical blow-up ends that episode as a
    /// fall with zero reward.
    pub fn step(&mut self, actions: &[Action]) -> Result<Vec<(StepOutcome, Option<EpisodeSummary>)>, EnvError> {
        if actions.len() != self.envs.len() {
            return Err(EnvError::InvalidInput(format!("expected {} actions, got {}", self.envs.len(), actions.len())));
        }
        let mut pairs: Vec<(&mut Quadruped, &mut Tally)> = self.envs.iter_mut().zip(self.tallies.iter_mut()).collect();
        let results = par::map_mut(self.exec, &mut pairs, |i, (env, tally)| step_one(env, tally, &actions[i]));
        results.into_iter().collect()
    }
}

fn step_one(env: &mut Quadruped, tally: &mut Tally, action: &Action) -> Result<(StepOutcome, Option<EpisodeSummary>), EnvError> {
    let outcome = match env.step(action) {
        Ok(o) => o,
        Err(EnvError::NumericalBlowup { .. }) => blowup_outcome(env),
        Err(e) => return Err(e),
    };
    tally.reward += outcome.reward;
    tally.abs_error += (env.state().qd[crate::dynamics::BASE_X] - env.command()).abs();
    if !outcome.termination.is_done() {
        return Ok((outcome, None));
    }
    let steps = env.steps();
    let summary = EpisodeSummary {
        total_reward: tally.reward,
        steps,
        termination: outcome.termination,
        tracking_error: if steps > 0 { tally.abs_error / steps as f64 } else { 0.0 },
    };
    *tally = Tally::default();
    env.reset();
    Ok((outcome, Some(summary)))
}

fn blowup_outcome(env: &Quadruped) -> StepOutcome {
    use crate::dynamics::{JointVec, Vec2};
    use crate::observer::ObserverTargets;
    StepOutcome {
        frame: *env.history().latest(),
        privileged: [0.0; crate::observation::PRIVILEGED_DIM],
        reward: 0.0,
        breakdown: Default::default(),
        termination: Termination::Fall,
        info: super::StepInfo {
            f_ext: Vec2::zeros(),
            contact_mean: [Vec2::zeros(); 2],
            tau_cmd: JointVec::zeros(),
            q_ref: JointVec::zeros(),
            delta_tau: JointVec::zeros(),
            targets: ObserverTargets { base_accel: [0.0; 2], pitch_accel: 0.0, contact: [0.0; 4], f_ext: [0.0; 2] },
            gm: None,
            blowup: true,
        },
    }
}
