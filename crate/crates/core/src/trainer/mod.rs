//! Two-stage PPO training: the hybrid locomotion policy first, then the
//! compensation policy and learned observer on top of it.

mod checkpoint;
mod config;
mod gae;
mod inference;
mod observer_fit;
mod policy;
mod ppo;
mod stage;

use std::path::Path;

pub use checkpoint::{
    decode, digest, encode, load_checkpoint, parse, read_manifest, save_checkpoint, Checkpoint, CheckpointError, Manifest,
    TensorEntry, FORMAT_VERSION, MAGIC,
};
pub use config::PpoConfig;
pub use gae::compute_gae;
pub use inference::{critic_row, daac_row, decide, raw_action, scaled_frames, scaled_histories, Decision};
pub use observer_fit::{fit_observer, observer_mse, ObserverOptimizer, ObserverSamples};
pub use policy::{
    Actor, Critic, DaacStack, PolicyStack, DAAC_CRITIC_DIM, DAAC_HIDDEN, HFPLP_CRITIC_DIM, HFPLP_HIDDEN,
};
pub use ppo::{ppo_update, LossStats, PpoOptimizer, RolloutBuffer};
pub use stage::{train_stage1, train_stage1_with, train_stage2, IterationRecord, TrainOutcome, TrainSetup};

use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error("frozen parameters of {component} changed")]
    ChecksumMismatch { component: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{0}")]
    Io(String),
}

impl TrainError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> TrainError {
        TrainError::Io(format!("{}: {e}", path.display()))
    }
}
