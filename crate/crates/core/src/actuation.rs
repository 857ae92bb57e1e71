//! Torque production: the hybrid position/feedforward actuator, the
//! position-only baseline, a foot-space PD reference, and final command
//! composition with compensation torques.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{JointVec, Vec2, NA, NL};

/// Joint-level PD gains shared by all actuated joints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorGains {
    pub kp_n_m_per_rad: f64,
    pub kd_n_m_s_per_rad: f64,
}

impl Default for ActuatorGains {
    fn default() -> Self {
        Self { kp_n_m_per_rad: 20.0, kd_n_m_s_per_rad: 0.5 }
    }
}

/// Mapping from unbounded network outputs to physical actions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionScales {
    pub position_scale_rad: f64,
    pub feedforward_scale_n_m: f64,
    pub compensation_scale_n_m: f64,
}

impl Default for ActionScales {
    fn default() -> Self {
        Self { position_scale_rad: 0.5, feedforward_scale_n_m: 10.0, compensation_scale_n_m: 5.0 }
    }
}

/// Target joint positions plus feedforward torques.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfplpAction {
    pub q_ref: JointVec,
    pub tau_ff: JointVec,
}

/// Additive joint-space compensation torques.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DaacAction {
    pub delta_tau: JointVec,
}

/// Final, saturated joint torques.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorqueCommand(pub JointVec);

/// `q_ref = q_nom + σ_pos·raw[0..4]`, `τ_ff = σ_ff·raw[4..8]` clamped to ±τ_max.
pub fn scale_raw_action(raw: &[f64; 2 * NA], q_nom: &JointVec, scales: &ActionScales, torque_limit: f64) -> HfplpAction {
    HfplpAction {
        q_ref: JointVec::from_fn(|i, _| q_nom[i] + scales.position_scale_rad * raw[i]),
        tau_ff: JointVec::from_fn(|i, _| (scales.feedforward_scale_n_m * raw[NA + i]).clamp(-torque_limit, torque_limit)),
    }
}

/// Inverse of [`scale_raw_action`] for unsaturated actions.
pub fn descale_action(action: &HfplpAction, q_nom: &JointVec, scales: &ActionScales) -> [f64; 2 * NA] {
    std::array::from_fn(|i| {
        if i < NA {
            (action.q_ref[i] - q_nom[i]) / scales.position_scale_rad
        } else {
            action.tau_ff[i - NA] / scales.feedforward_scale_n_m
        }
    })
}

/// Position-only action: `q_ref = q_nom + σ_pos·raw`.
pub fn scale_position_action(raw: &[f64; NA], q_nom: &JointVec, scales: &ActionScales) -> JointVec {
    JointVec::from_fn(|i, _| q_nom[i] + scales.position_scale_rad * raw[i])
}

/// Compensation torque `Δτ = σ_comp·clamp(raw, −1, 1)`.
pub fn scale_compensation(raw: &[f64; NA], scales: &ActionScales) -> DaacAction {
    DaacAction { delta_tau: JointVec::from_fn(|i, _| scales.compensation_scale_n_m * raw[i].clamp(-1.0, 1.0)) }
}

/// `τ_hfp = τ_ff + K_p (q_ref − q) − K_d q̇`, unclamped.
pub fn hybrid_joint_torque(action: &HfplpAction, q: &JointVec, qd: &JointVec, gains: &ActuatorGains) -> JointVec {
    action.tau_ff + (action.q_ref - q) * gains.kp_n_m_per_rad - qd * gains.kd_n_m_s_per_rad
}

/// `K_p (q_ref − q) − K_d q̇`.
pub fn position_only_torque(q_ref: &JointVec, q: &JointVec, qd: &JointVec, gains: &ActuatorGains) -> JointVec {
    (q_ref - q) * gains.kp_n_m_per_rad - qd * gains.kd_n_m_s_per_rad
}

/// Cartesian PD gains for the foot-space reference controller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartesianGains {
    pub kp_n_per_m: f64,
    pub kd_n_s_per_m: f64,
}

impl Default for CartesianGains {
    // placeholder values; never used for acceptance
    fn default() -> Self {
        Self { kp_n_per_m: 500.0, kd_n_s_per_m: 10.0 }
    }
}

/// Per-leg foot-space target.
#[derive(Clone, Copy, Debug)]
pub struct FootTarget {
    pub jacobian: Matrix2<f64>,
    pub p_ref: Vec2,
    pub v_ref: Vec2,
    pub p: Vec2,
    pub v: Vec2,
}

/// `τ_i = τ_i,ff + J_iᵀ[K_p (p_ref − p) + K_d (v_ref − v)]` for each leg, concatenated.
pub fn footspace_pd_torque(tau_ff: &JointVec, legs: &[FootTarget; NL], gains: &CartesianGains) -> JointVec {
    let mut tau = *tau_ff;
    for (leg, t) in legs.iter().enumerate() {
        let force = (t.p_ref - t.p) * gains.kp_n_per_m + (t.v_ref - t.v) * gains.kd_n_s_per_m;
        let joint = t.jacobian.transpose() * force;
        tau[2 * leg] += joint[0];
        tau[2 * leg + 1] += joint[1];
    }
    tau
}

/// `τ_cmd = clamp(τ_hfp + Δτ, ±τ_max)`; the only saturation point.
pub fn compose_command(tau_hfp: &JointVec, compensation: Option<&DaacAction>, torque_limit: f64) -> TorqueCommand {
    let sum = match compensation {
        Some(c) => tau_hfp + c.delta_tau,
        None => *tau_hfp,
    };
    TorqueCommand(sum.map(|t| t.clamp(-torque_limit, torque_limit)))
}
