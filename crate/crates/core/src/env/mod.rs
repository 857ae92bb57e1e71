//! The planar locomotion task: physics at 1 kHz, control at 100 Hz, sampled
//! commands, disturbances and payloads, observations, rewards, termination,
//! and a batch of independent instances.

mod config;
mod disturbance;
mod quadruped;
mod reward;
mod vec_env;

pub use config::{EnvConfig, RewardWeights};
pub use disturbance::{force_at, sample_disturbance, DisturbanceSpec, ForceWindow};
pub use quadruped::{
    check_termination, Action, ActionMode, EpisodeSetup, GmDiagnostics, Quadruped, Randomization, SimParams, StepInfo,
    StepOutcome, Termination,
};
pub use reward::{compute_reward, RewardBreakdown, RewardInputs};
pub use vec_env::{EpisodeSummary, VecEnv};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("numerical blow-up at t = {t:.3} s: {reason}")]
    NumericalBlowup { t: f64, reason: String },
    #[error("invalid environment input: {0}")]
    InvalidInput(String),
}
