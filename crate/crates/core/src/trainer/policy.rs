use rand::Rng;

use crate::env::ActionMode;
use crate::nn::{checksum, Activation, DenseNet, GaussianHead, NnError};
use crate::observation::{DAAC_OBS_DIM, HISTORY_DIM, OBS_DIM, POSITION_ACTION_DIM, PRIVILEGED_DIM};
use crate::observer::NeuralObserver;

pub const HFPLP_HIDDEN: [usize; 3] = [256, 128, 64];
pub const DAAC_HIDDEN: [usize; 3] = [128, 64, 32];
pub const HFPLP_CRITIC_DIM: usize = OBS_DIM + PRIVILEGED_DIM;
pub const DAAC_CRITIC_DIM: usize = DAAC_OBS_DIM + PRIVILEGED_DIM;

const RELU_GAIN: f32 = std::f32::consts::SQRT_2;
/// Final policy layer gain: initial means are close to zero.
const POLICY_OUTPUT_GAIN: f32 = 0.01;

fn dims(input: usize, hidden: &[usize; 3], output: usize) -> Vec<usize> {
    let mut d = vec![input];
    d.extend_from_slice(hidden);
    d.push(output);
    d
}

/// Gaussian policy with a state-independent standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    pub net: DenseNet,
    pub head: GaussianHead,
}

impl Actor {
    pub fn new(input: usize, hidden: &[usize; 3], output: usize, init_log_std: f32, rng: &mut impl Rng) -> Actor {
        Actor {
            net: DenseNet::new(&dims(input, hidden, output), Activation::Relu, Activation::Identity, RELU_GAIN, POLICY_OUTPUT_GAIN, rng),
            head: GaussianHead::new(output, init_log_std),
        }
    }

    pub fn zeros(input: usize, hidden: &[usize; 3], output: usize) -> Actor {
        Actor {
            net: DenseNet::zeros(&dims(input, hidden, output), Activation::Relu, Activation::Identity),
            head: GaussianHead::new(output, 0.0),
        }
    }

    pub fn action_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn means(&self, obs: &[f32], batch: usize) -> Result<Vec<f32>, NnError> {
        Ok(self.net.forward_batch(obs, batch)?.acts.pop().expect("output"))
    }

    /// Digest of every parameter including the log standard deviations.
    pub fn checksum(&self) -> String {
        let mut all = self.net.params().to_vec();
        all.extend_from_slice(self.head.log_std());
        checksum(&all)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    pub net: DenseNet,
}

impl Critic {
    pub fn new(input: usize, hidden: &[usize; 3], rng: &mut impl Rng) -> Critic {
        Critic { net: DenseNet::new(&dims(input, hidden, 1), Activation::Relu, Activation::Identity, RELU_GAIN, 1.0, rng) }
    }

    pub fn zeros(input: usize, hidden: &[usize; 3]) -> Critic {
        Critic { net: DenseNet::zeros(&dims(input, hidden, 1), Activation::Relu, Activation::Identity) }
    }

    pub fn values(&self, obs: &[f32], batch: usize) -> Result<Vec<f32>, NnError> {
        Ok(self.net.forward_batch(obs, batch)?.acts.pop().expect("output"))
    }
}

/// Second-stage components.
#[derive(Clone, Debug, PartialEq)]
pub struct DaacStack {
    pub actor: Actor,
    pub critic: Critic,
    pub observer: NeuralObserver,
    /// When false the estimated-force slot of the policy input is held at zero.
    pub use_observer: bool,
}

/// All networks of the workbench.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyStack {
    pub mode: ActionMode,
    pub hfplp_actor: Actor,
    pub hfplp_critic: Critic,
    pub daac: Option<DaacStack>,
}

impl PolicyStack {
    pub fn new_stage1(mode: ActionMode, init_log_std: f32, rng: &mut impl Rng) -> PolicyStack {
        PolicyStack {
            mode,
            hfplp_actor: Actor::new(HISTORY_DIM, &HFPLP_HIDDEN, mode.dim(), init_log_std, rng),
            hfplp_critic: Critic::new(HFPLP_CRITIC_DIM, &HFPLP_HIDDEN, rng),
            daac: None,
        }
    }

    /// Zero-valued stack with the architecture implied by `mode` and `stage`.
    pub fn template(mode: ActionMode, with_daac: bool) -> PolicyStack {
        PolicyStack {
            mode,
            hfplp_actor: Actor::zeros(HISTORY_DIM, &HFPLP_HIDDEN, mode.dim()),
            hfplp_critic: Critic::zeros(HFPLP_CRITIC_DIM, &HFPLP_HIDDEN),
            daac: with_daac.then(|| DaacStack {
                actor: Actor::zeros(DAAC_OBS_DIM, &DAAC_HIDDEN, POSITION_ACTION_DIM),
                critic: Critic::zeros(DAAC_CRITIC_DIM, &DAAC_HIDDEN),
                observer: NeuralObserver::zeros(),
                use_observer: true,
            }),
        }
    }

    /// Attach fresh second-stage networks.
    pub fn with_daac(mut self, init_log_std: f32, use_observer: bool, rng: &mut impl Rng) -> PolicyStack {
        self.daac = Some(DaacStack {
            actor: Actor::new(DAAC_OBS_DIM, &DAAC_HIDDEN, POSITION_ACTION_DIM, init_log_std, rng),
            critic: Critic::new(DAAC_CRITIC_DIM, &DAAC_HIDDEN, rng),
            observer: NeuralObserver::new(rng),
            use_observer,
        });
        self
    }

    pub fn stage(&self) -> u32 {
        if self.daac.is_some() {
            2
        } else {
            1
        }
    }

    /// Digest of the first-stage actor and critic, used for the freeze contract.
    pub fn hfplp_checksum(&self) -> String {
        let mut all = self.hfplp_actor.net.params().to_vec();
        all.extend_from_slice(self.hfplp_actor.head.log_std());
        all.extend_from_slice(self.hfplp_critic.net.params());
        checksum(&all)
    }
}
