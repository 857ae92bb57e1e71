//! Disturbance estimation: the analytic momentum observer, the learned
//! two-network observer, its supervision targets, and the mapping from
//! compensation torques to foot forces.

mod gm;
mod neural;

pub use gm::{filter_input, gm_observer_step, step_with_input, ObserverConfig, ObserverState};
pub use neural::{estimate_from_normalized, NeuralObserver, ObserverEstimate, HIDDEN, NET1_OUT, NET1_SCALES, NET2_OUT, NET2_SCALES};

use nalgebra::Matrix2;

use crate::dynamics::Vec2;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ObserverError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("leg Jacobian is near singular (|det| = {det:e})")]
    NearSingularJacobian { det: f64 },
    #[error(transparent)]
    Net(#[from] NnError),
}

pub const DEFAULT_SINGULAR_EPS: f64 = 1e-4;

/// Supervision targets for the learned observer at one control step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverTargets {
    pub base_accel: [f64; 2],
    pub pitch_accel: f64,
    pub contact: [f64; 4],
    pub f_ext: [f64; 2],
}

impl ObserverTargets {
    /// Targets divided by the network output scales.
    pub fn normalized(&self) -> ([f32; NET1_OUT], [f32; NET2_OUT]) {
        let raw = [
            self.base_accel[0],
            self.base_accel[1],
            self.pitch_accel,
            self.contact[0],
            self.contact[1],
            self.contact[2],
            self.contact[3],
        ];
        (
            std::array::from_fn(|i| (raw[i] / NET1_SCALES[i]) as f32),
            std::array::from_fn(|i| (self.f_ext[i] / NET2_SCALES[i]) as f32),
        )
    }
}

/// Targets from two consecutive base velocities `[vx, vz, ω]`, the contact
/// forces averaged over the control period, and the applied external force.
pub fn observer_targets(prev_base_vel: &[f64; 3], base_vel: &[f64; 3], dt: f64, contact: &[Vec2; 2], f_ext: &Vec2) -> ObserverTargets {
    ObserverTargets {
        base_accel: [(base_vel[0] - prev_base_vel[0]) / dt, (base_vel[1] - prev_base_vel[1]) / dt],
        pitch_accel: (base_vel[2] - prev_base_vel[2]) / dt,
        contact: [contact[0].x, contact[0].y, contact[1].x, contact[1].y],
        f_ext: [f_ext.x, f_ext.y],
    }
}

/// `F_ee = J⁻ᵀ Δτ` for one leg.
pub fn foot_force_from_compensation(delta_tau: &Vec2, leg_jacobian: &Matrix2<f64>, eps: f64) -> Result<Vec2, ObserverError> {
    let det = leg_jacobian.determinant();
    if det.abs() <= eps {
        return Err(ObserverError::NearSingularJacobian { det });
    }
    let jt = leg_jacobian.transpose();
    // 2x2 solve by Cramer's rule
    let f = Vec2::new(
        (delta_tau.x * jt[(1, 1)] - jt[(0, 1)] * delta_tau.y) / det,
        (jt[(0, 0)] * delta_tau.y - jt[(1, 0)] * delta_tau.x) / det,
    );
    Ok(f)
}
