use serde::Serialize;

use crate::dynamics::JointVec;

use super::RewardWeights;

/// Quantities the reward depends on, sampled at the end of a control step.
#[derive(Clone, Debug)]
pub struct RewardInputs<'a> {
    pub forward_velocity: f64,
    pub vertical_velocity: f64,
    pub pitch_rate: f64,
    /// x component of gravity projected into the trunk frame.
    pub gravity_x: f64,
    pub height: f64,
    pub nominal_height: f64,
    pub torque: &'a JointVec,
    pub action: &'a [f64],
    pub prev_action: &'a [f64],
    pub command: f64,
    /// Joint targets, when the action carries them.
    pub joint_targets: Option<&'a JointVec>,
    pub joints: &'a JointVec,
}

/// Weighted value of each reward term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RewardBreakdown {
    pub velocity_tracking: f64,
    pub vertical_velocity: f64,
    pub pitch_rate: f64,
    pub orientation: f64,
    pub torque: f64,
    pub action_rate: f64,
    pub base_height: f64,
    pub joint_tracking: f64,
}

impl RewardBreakdown {
    pub const NAMES: [&'static str; 8] =
        ["velocity_tracking", "vertical_velocity", "pitch_rate", "orientation", "torque", "action_rate", "base_height", "joint_tracking"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.velocity_tracking,
            self.vertical_velocity,
            self.pitch_rate,
            self.orientation,
            self.torque,
            self.action_rate,
            self.base_height,
            self.joint_tracking,
        ]
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }
}

pub fn compute_reward(w: &RewardWeights, x: &RewardInputs<'_>) -> (f64, RewardBreakdown) {
    let err = x.forward_velocity - x.command;
    let action_rate: f64 = x.action.iter().zip(x.prev_action).map(|(a, b)| (a - b) * (a - b)).sum();
    let b = RewardBreakdown {
        velocity_tracking: w.velocity_tracking * (-err * err / w.velocity_tracking_sigma).exp(),
        vertical_velocity: w.vertical_velocity * x.vertical_velocity * x.vertical_velocity,
        pitch_rate: w.pitch_rate * x.pitch_rate * x.pitch_rate,
        orientation: w.orientation * x.gravity_x * x.gravity_x,
        torque: w.torque * x.torque.norm_squared(),
        action_rate: w.action_rate * action_rate,
        base_height: w.base_height * (x.height - x.nominal_height).powi(2),
        joint_tracking: x.joint_targets.map_or(0.0, |r| w.joint_tracking * (r - x.joints).norm_squared()),
    };
    (b.total(), b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base<'a>(tau: &'a JointVec, q: &'a JointVec, a: &'a [f64]) -> RewardInputs<'a> {
        RewardInputs {
            forward_velocity: 0.7,
            vertical_velocity: 0.0,
            pitch_rate: 0.0,
            gravity_x: 0.0,
            height: 0.33,
            nominal_height: 0.33,
            torque: tau,
            action: a,
            prev_action: a,
            command: 0.7,
            joint_targets: None,
            joints: q,
        }
    }

    #[test]
    fn perfect_tracking_is_one() {
        let (tau, q, a) = (JointVec::zeros(), JointVec::zeros(), [0.0; 8]);
        let (total, _) = compute_reward(&RewardWeights::default(), &base(&tau, &q, &a));
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn joint_tracking_term() {
        let (tau, q, a) = (JointVec::zeros(), JointVec::repeat(0.5), [0.0; 8]);
        let r = JointVec::repeat(0.6);
        let mut x = base(&tau, &q, &a);
        x.joint_targets = Some(&r);
        let (_, b) = compute_reward(&RewardWeights::default(), &x);
        assert!((b.joint_tracking + 0.008).abs() < 1e-12);
    }

    #[test]
    fn torque_penalty_is_quadratic() {
        let (q, a) = (JointVec::zeros(), [0.0; 8]);
        let t1 = JointVec::new(1.0, -2.0, 3.0, 4.0);
        let t2 = t1 * 2.0;
        let (_, b1) = compute_reward(&RewardWeights::default(), &base(&t1, &q, &a));
        let (_, b2) = compute_reward(&RewardWeights::default(), &base(&t2, &q, &a));
        assert!((b2.torque - 4.0 * b1.torque).abs() < 1e-15);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let (tau, q) = (JointVec::new(3.0, 1.0, -2.0, 5.0), JointVec::new(0.1, 0.2, 0.3, 0.4));
        let a = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let p = [0.0; 8];
        let r = JointVec::repeat(0.2);
        let x = RewardInputs {
            forward_velocity: 0.2,
            vertical_velocity: 0.1,
            pitch_rate: -0.5,
            gravity_x: 0.1,
            height: 0.3,
            nominal_height: 0.33,
            torque: &tau,
            action: &a,
            prev_action: &p,
            command: 1.0,
            joint_targets: Some(&r),
            joints: &q,
        };
        let (total, b) = compute_reward(&RewardWeights::default(), &x);
        assert!((b.values().iter().sum::<f64>() - total).abs() < 1e-12);
    }
}
