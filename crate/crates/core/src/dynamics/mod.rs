//! Planar sagittal quadruped rigid-body dynamics.
//!
//! Generalized coordinates are `[x, z, pitch, front hip, front knee, rear hip,
//! rear knee]`. The trunk is a floating base; the four joints are actuated.
//! Equations of motion:
//!
//! ```text
//! M(q) q̈ + C(q, q̇) q̇ + G(q) = Sᵀτ + Σ J_cᵀF_c + J_extᵀF_ext
//! ```

mod contact;
mod kinematics;
mod model;
mod terms;

pub use contact::{contact_damping, contact_force, contact_forces};
pub use kinematics::{kinematics, leg_jacobian, Kinematics, LinkFrame, LINK_COUNT};
pub use model::*;
pub use terms::{
    coriolis_from_partials, coriolis_matrix, external_force_jacobian, foot_kinematics, forward_dynamics, gravity_vector,
    kinetic_energy, mass_matrix, mass_matrix_partials, potential_energy, true_generalized_disturbance, DynamicsTerms,
    FootKinematics, CHRISTOFFEL_STEP,
};

use nalgebra::{Matrix2, Vector2};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("mass matrix is numerically singular; state is corrupted")]
    LinearSolveFailure,
    #[error("invalid dynamics input: {0}")]
    InvalidInput(String),
}

/// Semi-implicit Euler: `q̇ ← q̇ + q̈ h`, then `q ← q + q̇ h`.
pub fn integrate_semi_implicit(state: &mut State, qdd: &GenVec, h: f64) {
    state.qd += qdd * h;
    state.q += state.qd * h;
    state.t += h;
}

/// A standing pose in static equilibrium on penalty contacts.
#[derive(Clone, Debug)]
pub struct StaticStance {
    pub state: State,
    pub torques: JointVec,
    pub contact: [Vec2; NL],
}

/// Finds base height and pitch for the given joint angles such that the feet
/// sink just far enough into the penalty ground to carry the weight with zero
/// friction, and the joint torques holding that pose.
pub fn static_stance(model: &RobotModel, contact: &ContactParams, joints: &JointVec) -> Result<StaticStance, DynamicsError> {
    let mut state = State::standing(0.0, model.nominal_height() + contact.ground_height_m, joints);
    let mut forces = [Vec2::zeros(); NL];
    for _ in 0..50 {
        let g = gravity_vector(model, &state.q);
        let feet = foot_kinematics(model, &state.q, &state.qd);
        // vertical and pitch balance with purely normal forces
        let a = Matrix2::new(
            feet.jacobians[0][(1, BASE_Z)],
            feet.jacobians[1][(1, BASE_Z)],
            feet.jacobians[0][(1, PITCH)],
            feet.jacobians[1][(1, PITCH)],
        );
        let fz = a
            .lu()
            .solve(&Vector2::new(g[BASE_Z], g[PITCH]))
            .ok_or(DynamicsError::LinearSolveFailure)?;
        if fz.iter().any(|f| *f <= 0.0) {
            return Err(DynamicsError::InvalidInput("stance requires a pulling foot".into()));
        }
        forces = [Vec2::new(0.0, fz[0]), Vec2::new(0.0, fz[1])];
        // foot heights that produce those forces
        let target = Vector2::new(
            contact.ground_height_m - fz[0] / contact.normal_stiffness_n_per_m,
            contact.ground_height_m - fz[1] / contact.normal_stiffness_n_per_m,
        );
        let current = Vector2::new(feet.positions[0].y, feet.positions[1].y);
        let err = target - current;
        if err.amax() < 1e-13 {
            break;
        }
        let jac = Matrix2::new(
            feet.jacobians[0][(1, BASE_Z)],
            feet.jacobians[0][(1, PITCH)],
            feet.jacobians[1][(1, BASE_Z)],
            feet.jacobians[1][(1, PITCH)],
        );
        let step = jac.lu().solve(&err).ok_or(DynamicsError::LinearSolveFailure)?;
        state.q[BASE_Z] += step[0];
        state.q[PITCH] += step[1];
    }
    let g = gravity_vector(model, &state.q);
    let feet = foot_kinematics(model, &state.q, &state.qd);
    let contact_gen = true_generalized_disturbance(&feet.jacobians, &forces, &external_force_jacobian(), &Vec2::zeros());
    let torques = (g - contact_gen).fixed_rows::<NA>(JOINT_OFFSET).into_owned();
    Ok(StaticStance { state, torques, contact: forces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_q(rng: &mut ChaCha8Rng) -> GenVec {
        GenVec::from_fn(|i, _| match i {
            BASE_X => rng.gen_range(-2.0..2.0),
            BASE_Z => rng.gen_range(0.1..0.6),
            _ => rng.gen_range(-1.5..1.5),
        })
    }

    #[test]
    fn translational_block_carries_total_mass() {
        let model = RobotModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = mass_matrix(&model, &random_q(&mut rng));
            assert!((m[(0, 0)] - 13.0).abs() < 1e-12);
            assert!((m[(1, 1)] - 13.0).abs() < 1e-12);
            assert_eq!(m[(0, 1)], 0.0);
            assert!((m - m.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn mass_matrix_positive_definite() {
        let model = RobotModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let m = mass_matrix(&model, &random_q(&mut rng));
            let eig = m.symmetric_eigenvalues();
            assert!(eig.min() > 1e-6, "min eigenvalue {}", eig.min());
        }
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let model = RobotModel::default();
        let q = random_q(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(coriolis_matrix(&model, &q, &GenVec::zeros()), GenMat::zeros());
    }

    #[test]
    fn gravity_rows() {
        let model = RobotModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let g = gravity_vector(&model, &random_q(&mut rng));
            assert_eq!(g[BASE_X], 0.0);
            assert!((g[BASE_Z] - 13.0 * 9.81).abs() < 1e-9);
        }
    }

    #[test]
    fn feet_at_rest_have_no_velocity() {
        let model = RobotModel::default();
        let q = random_q(&mut ChaCha8Rng::seed_from_u64(5));
        let fk = foot_kinematics(&model, &q, &GenVec::zeros());
        assert_eq!(fk.velocities[0], Vec2::zeros());
        assert_eq!(fk.velocities[1], Vec2::zeros());
    }

    #[test]
    fn nominal_feet_symmetric_about_base() {
        let model = RobotModel::default();
        let s = State::standing(0.7, 0.33, &model.nominal_joints());
        let fk = foot_kinematics(&model, &s.q, &s.qd);
        assert!((fk.positions[0].x - 0.7 + (fk.positions[1].x - 0.7)).abs() < 1e-12);
        assert!((fk.positions[0].y - fk.positions[1].y).abs() < 1e-12);
    }

    #[test]
    fn free_fall_onset() {
        let model = RobotModel::default();
        let s = State::standing(0.0, 1.0, &model.nominal_joints());
        let qdd = forward_dynamics(&model, &s, &JointVec::zeros(), &[Vec2::zeros(); NL], &Vec2::zeros(), 0.0).unwrap();
        assert!(qdd[BASE_Z].abs() <= 9.81 + 1e-9);
        // center-of-mass acceleration is exactly -g
        let kin = kinematics(&model, &s.q);
        let com_acc: Vec2 = kin.links.iter().map(|l| l.jacobian * qdd * l.mass).sum::<Vec2>() / model.total_mass();
        assert!(com_acc.x.abs() < 1e-9);
        assert!((com_acc.y + 9.81).abs() < 1e-9, "{}", com_acc.y);
    }

    #[test]
    fn static_stance_is_equilibrium() {
        let model = RobotModel::default();
        let cp = ContactParams::default();
        let st = static_stance(&model, &cp, &model.nominal_joints()).unwrap();
        let fk = foot_kinematics(&model, &st.state.q, &st.state.qd);
        let fc = contact_forces(&cp, &fk.positions, &fk.velocities);
        for (a, b) in fc.iter().zip(&st.contact) {
            assert!((a - b).amax() < 1e-6);
        }
        let qdd = forward_dynamics(&model, &st.state, &st.torques, &st.contact, &Vec2::zeros(), 0.0).unwrap();
        assert!(qdd.amax() < 1e-9, "{qdd}");
    }

    #[test]
    fn payload_rejects_negative_and_torque_over_limit() {
        let model = RobotModel::default();
        let s = State::standing(0.0, 1.0, &model.nominal_joints());
        let f = [Vec2::zeros(); NL];
        assert!(forward_dynamics(&model, &s, &JointVec::zeros(), &f, &Vec2::zeros(), -1.0).is_err());
        let tau = JointVec::new(31.0, 0.0, 0.0, 0.0);
        assert!(forward_dynamics(&model, &s, &tau, &f, &Vec2::zeros(), 0.0).is_err());
    }

    #[test]
    fn external_force_lands_on_base_translation() {
        let model = RobotModel::default();
        let s = State::standing(0.0, 1.0, &model.nominal_joints());
        let fk = foot_kinematics(&model, &s.q, &s.qd);
        let td = true_generalized_disturbance(&fk.jacobians, &[Vec2::zeros(); NL], &external_force_jacobian(), &Vec2::new(50.0, 0.0));
        assert_eq!(td[BASE_X], 50.0);
        assert_eq!(td[BASE_Z], 0.0);
        assert!(td.rows(2, 5).iter().all(|v| *v == 0.0));
        let zero = true_generalized_disturbance(&fk.jacobians, &[Vec2::zeros(); NL], &external_force_jacobian(), &Vec2::zeros());
        assert_eq!(zero, GenVec::zeros());
    }
}
