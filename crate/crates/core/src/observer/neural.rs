//! Two concatenated dense networks: the first maps proprioceptive history to
//! base accelerations and contact forces, the second maps the current frame
//! plus those estimates to the external force on the trunk.

use rand::Rng;

use crate::nn::{Activation, DenseNet};
use crate::observation::{HISTORY_DIM, OBS_DIM};

use super::ObserverError;

pub const NET1_OUT: usize = 7;
pub const NET2_OUT: usize = 2;
pub const HIDDEN: [usize; 3] = [128, 64, 32];

/// Physical units per unit of network output: base acceleration x/z,
/// pitch acceleration, four contact force components, two external force components.
pub const NET1_SCALES: [f64; NET1_OUT] = [5.0, 5.0, 20.0, 100.0, 100.0, 100.0, 100.0];
pub const NET2_SCALES: [f64; NET2_OUT] = [100.0, 100.0];

#[derive(Clone, Debug, PartialEq)]
pub struct NeuralObserver {
    pub net1: DenseNet,
    pub net2: DenseNet,
}

/// Observer output in physical units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverEstimate {
    /// Base linear acceleration (m/s², world x/z).
    pub base_accel: [f64; 2],
    /// Pitch angular acceleration (rad/s²).
    pub pitch_accel: f64,
    /// Contact forces, front (x, z) then rear (x, z), in N.
    pub contact: [f64; 4],
    /// External force on the trunk (N).
    pub f_ext: [f64; 2],
}

impl NeuralObserver {
    pub fn new(rng: &mut impl Rng) -> NeuralObserver {
        let d1 = [HISTORY_DIM, HIDDEN[0], HIDDEN[1], HIDDEN[2], NET1_OUT];
        let d2 = [OBS_DIM + NET1_OUT, HIDDEN[0], HIDDEN[1], HIDDEN[2], NET2_OUT];
        let g = std::f32::consts::SQRT_2;
        NeuralObserver {
            net1: DenseNet::new(&d1, Activation::Relu, Activation::Identity, g, 1.0, rng),
            net2: DenseNet::new(&d2, Activation::Relu, Activation::Identity, g, 1.0, rng),
        }
    }

    pub fn zeros() -> NeuralObserver {
        let d1 = [HISTORY_DIM, HIDDEN[0], HIDDEN[1], HIDDEN[2], NET1_OUT];
        let d2 = [OBS_DIM + NET1_OUT, HIDDEN[0], HIDDEN[1], HIDDEN[2], NET2_OUT];
        NeuralObserver {
            net1: DenseNet::zeros(&d1, Activation::Relu, Activation::Identity),
            net2: DenseNet::zeros(&d2, Activation::Relu, Activation::Identity),
        }
    }

    /// Second-network input rows: scaled frame followed by the normalized first-network output.
    pub fn net2_input(obs: &[f32], net1_out: &[f32], batch: usize) -> Vec<f32> {
        let mut x = Vec::with_capacity(batch * (OBS_DIM + NET1_OUT));
        for b in 0..batch {
            x.extend_from_slice(&obs[b * OBS_DIM..(b + 1) * OBS_DIM]);
            x.extend_from_slice(&net1_out[b * NET1_OUT..(b + 1) * NET1_OUT]);
        }
        x
    }

    /// Normalized outputs of both networks for a batch of scaled inputs.
    pub fn forward_batch(&self, history: &[f32], obs: &[f32], batch: usize) -> Result<(Vec<f32>, Vec<f32>), ObserverError> {
        if history.len() != batch * HISTORY_DIM {
            return Err(ObserverError::ShapeMismatch { expected: batch * HISTORY_DIM, got: history.len() });
        }
        if obs.len() != batch * OBS_DIM {
            return Err(ObserverError::ShapeMismatch { expected: batch * OBS_DIM, got: obs.len() });
        }
        let o1 = self.net1.forward_batch(history, batch)?.acts.pop().expect("output");
        let x2 = Self::net2_input(obs, &o1, batch);
        let o2 = self.net2.forward_batch(&x2, batch)?.acts.pop().expect("output");
        Ok((o1, o2))
    }

    /// Physical estimate from a scaled history (120) and scaled current frame (24).
    pub fn forward(&self, history: &[f32], obs: &[f32]) -> Result<ObserverEstimate, ObserverError> {
        let (o1, o2) = self.forward_batch(history, obs, 1)?;
        Ok(estimate_from_normalized(&o1, &o2))
    }
}

pub fn estimate_from_normalized(o1: &[f32], o2: &[f32]) -> ObserverEstimate {
    let p1: [f64; NET1_OUT] = std::array::from_fn(|i| o1[i] as f64 * NET1_SCALES[i]);
    ObserverEstimate {
        base_accel: [p1[0], p1[1]],
        pitch_accel: p1[2],
        contact: [p1[3], p1[4], p1[5], p1[6]],
        f_ext: [o2[0] as f64 * NET2_SCALES[0], o2[1] as f64 * NET2_SCALES[1]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_outputs() {
        let obs = NeuralObserver::zeros();
        let e = obs.forward(&[0.3; HISTORY_DIM], &[0.1; OBS_DIM]).unwrap();
        assert_eq!(e.base_accel, [0.0; 2]);
        assert_eq!(e.pitch_accel, 0.0);
        assert_eq!(e.contact, [0.0; 4]);
        assert_eq!(e.f_ext, [0.0; 2]);
    }

    #[test]
    fn wrong_lengths_are_rejected() {
        let obs = NeuralObserver::zeros();
        assert!(matches!(obs.forward(&[0.0; 119], &[0.0; OBS_DIM]), Err(ObserverError::ShapeMismatch { .. })));
        assert!(matches!(obs.forward(&[0.0; HISTORY_DIM], &[0.0; 23]), Err(ObserverError::ShapeMismatch { .. })));
    }

    #[test]
    fn layer_shapes() {
        let obs = NeuralObserver::new(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(obs.net1.input_dim(), 120);
        assert_eq!(obs.net1.output_dim(), 7);
        assert_eq!(obs.net2.input_dim(), 31);
        assert_eq!(obs.net2.output_dim(), 2);
        let widths: Vec<usize> = obs.net1.layers().iter().map(|l| l.outputs).collect();
        assert_eq!(widths, vec![128, 64, 32, 7]);
    }
}
