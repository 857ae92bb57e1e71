use nalgebra::{Cholesky, Const};

use super::kinematics::{kinematics, Kinematics};
use super::model::*;
use super::DynamicsError;

/// Central-difference step for the mass-matrix partials.
pub const CHRISTOFFEL_STEP: f64 = 1e-6;

fn mass_from_kinematics(kin: &Kinematics) -> GenMat {
    let mut m = GenMat::zeros();
    for link in &kin.links {
        m += link.jacobian.transpose() * link.jacobian * link.mass;
        for i in 0..NQ {
            if link.angular[i] == 0.0 {
                continue;
            }
            for j in 0..NQ {
                m[(i, j)] += link.inertia * link.angular[i] * link.angular[j];
            }
        }
    }
    m
}

pub fn mass_matrix(model: &RobotModel, q: &GenVec) -> GenMat {
    mass_from_kinematics(&kinematics(model, q))
}

/// `∂M/∂q_k` for every coordinate. The base translation does not enter `M`,
/// so those two partials are exactly zero and are not differenced.
pub fn mass_matrix_partials(model: &RobotModel, q: &GenVec) -> [GenMat; NQ] {
    let mut out = [GenMat::zeros(); NQ];
    for (k, dm) in out.iter_mut().enumerate().skip(PITCH) {
        let mut qp = *q;
        let mut qm = *q;
        qp[k] += CHRISTOFFEL_STEP;
        qm[k] -= CHRISTOFFEL_STEP;
        *dm = (mass_matrix(model, &qp) - mass_matrix(model, &qm)) / (2.0 * CHRISTOFFEL_STEP);
    }
    out
}

/// Coriolis matrix from the Christoffel symbols of `M`:
/// `C_ij = ½ Σ_k (∂M_ij/∂q_k + ∂M_ik/∂q_j − ∂M_jk/∂q_i) q̇_k`.
pub fn coriolis_from_partials(partials: &[GenMat; NQ], qd: &GenVec) -> GenMat {
    let mut m_dot = GenMat::zeros();
    // column j holds (∂M/∂q_j) q̇
    let mut b = GenMat::zeros();
    for k in 0..NQ {
        m_dot += partials[k] * qd[k];
        b.set_column(k, &(partials[k] * qd));
    }
    (m_dot + b - b.transpose()) * 0.5
}

pub fn coriolis_matrix(model: &RobotModel, q: &GenVec, qd: &GenVec) -> GenMat {
    coriolis_from_partials(&mass_matrix_partials(model, q), qd)
}

/// Generalized gravity `∂V/∂q` with `V = Σ m g z`.
pub fn gravity_vector(model: &RobotModel, q: &GenVec) -> GenVec {
    gravity_from_kinematics(model, &kinematics(model, q))
}

fn gravity_from_kinematics(model: &RobotModel, kin: &Kinematics) -> GenVec {
    let mut g = GenVec::zeros();
    for link in &kin.links {
        g += link.jacobian.row(1).transpose() * (link.mass * model.gravity_m_per_s2);
    }
    g
}

pub fn kinetic_energy(model: &RobotModel, q: &GenVec, qd: &GenVec) -> f64 {
    0.5 * qd.dot(&(mass_matrix(model, q) * qd))
}

pub fn potential_energy(model: &RobotModel, q: &GenVec) -> f64 {
    kinematics(model, q)
        .links
        .iter()
        .map(|l| l.mass * model.gravity_m_per_s2 * l.com.y)
        .sum()
}

/// Foot positions, velocities and contact Jacobians.
#[derive(Clone, Debug)]
pub struct FootKinematics {
    pub positions: [Vec2; NL],
    pub velocities: [Vec2; NL],
    pub jacobians: [PointJacobian; NL],
}

pub fn foot_kinematics(model: &RobotModel, q: &GenVec, qd: &GenVec) -> FootKinematics {
    let kin = kinematics(model, q);
    FootKinematics {
        positions: kin.feet,
        velocities: [kin.foot_jacobians[0] * qd, kin.foot_jacobians[1] * qd],
        jacobians: kin.foot_jacobians,
    }
}

/// Jacobian of the trunk center of mass, where external disturbance forces act.
pub fn external_force_jacobian() -> PointJacobian {
    let mut j = PointJacobian::zeros();
    j[(0, BASE_X)] = 1.0;
    j[(1, BASE_Z)] = 1.0;
    j
}

/// Everything the equations of motion need at one state.
#[derive(Clone, Debug)]
pub struct DynamicsTerms {
    pub mass: GenMat,
    pub coriolis: GenMat,
    pub gravity: GenVec,
    pub feet: FootKinematics,
}

impl DynamicsTerms {
    pub fn evaluate(model: &RobotModel, q: &GenVec, qd: &GenVec) -> DynamicsTerms {
        let kin = kinematics(model, q);
        let mass = mass_from_kinematics(&kin);
        let gravity = gravity_from_kinematics(model, &kin);
        let coriolis = coriolis_from_partials(&mass_matrix_partials(model, q), qd);
        let feet = FootKinematics {
            positions: kin.feet,
            velocities: [kin.foot_jacobians[0] * qd, kin.foot_jacobians[1] * qd],
            jacobians: kin.foot_jacobians,
        };
        DynamicsTerms { mass, coriolis, gravity, feet }
    }

    /// Generalized force on the right-hand side of the equations of motion,
    /// excluding the velocity-product and gravity terms.
    pub fn applied_force(&self, tau: &JointVec, contact: &[Vec2; NL], f_ext: &Vec2) -> GenVec {
        let mut f = GenVec::zeros();
        f.fixed_rows_mut::<NA>(JOINT_OFFSET).copy_from(tau);
        f += true_generalized_disturbance(&self.feet.jacobians, contact, &external_force_jacobian(), f_ext);
        f
    }

    /// Solve `M q̈ = Sᵀτ + J_cᵀF_c + J_extᵀF_ext − C q̇ − G`.
    pub fn acceleration(
        &self,
        qd: &GenVec,
        tau: &JointVec,
        contact: &[Vec2; NL],
        f_ext: &Vec2,
    ) -> Result<GenVec, DynamicsError> {
        let rhs = self.applied_force(tau, contact, f_ext) - self.coriolis * qd - self.gravity;
        let chol = Cholesky::<f64, Const<NQ>>::new(self.mass).ok_or(DynamicsError::LinearSolveFailure)?;
        let qdd = chol.solve(&rhs);
        if qdd.iter().all(|v| v.is_finite()) {
            Ok(qdd)
        } else {
            Err(DynamicsError::LinearSolveFailure)
        }
    }

    /// Linearly implicit step for the contact damping: solves
    /// `(M + h Σ J_cᵀ diag(c) J_c) q̈ = rhs`, where `c` holds the per-foot
    /// velocity slopes from [`contact_damping`](super::contact::contact_damping).
    /// With `h = 0` this is [`DynamicsTerms::acceleration`].
    pub fn implicit_acceleration(
        &self,
        qd: &GenVec,
        tau: &JointVec,
        contact: &[Vec2; NL],
        f_ext: &Vec2,
        damping: &[Vec2; NL],
        h: f64,
    ) -> Result<GenVec, DynamicsError> {
        let rhs = self.applied_force(tau, contact, f_ext) - self.coriolis * qd - self.gravity;
        let mut lhs = self.mass;
        for (j, c) in self.feet.jacobians.iter().zip(damping) {
            lhs += j.transpose() * nalgebra::Matrix2::from_diagonal(c) * j * h;
        }
        let chol = Cholesky::<f64, Const<NQ>>::new(lhs).ok_or(DynamicsError::LinearSolveFailure)?;
        let qdd = chol.solve(&rhs);
        if qdd.iter().all(|v| v.is_finite()) {
            Ok(qdd)
        } else {
            Err(DynamicsError::LinearSolveFailure)
        }
    }
}

/// Forward dynamics with the payload folded into the trunk. `contact` holds
/// the per-foot ground forces, `f_ext` the force on the trunk center of mass.
pub fn forward_dynamics(
    model: &RobotModel,
    state: &State,
    tau: &JointVec,
    contact: &[Vec2; NL],
    f_ext: &Vec2,
    payload_kg: f64,
) -> Result<GenVec, DynamicsError> {
    if !(payload_kg >= 0.0) {
        return Err(DynamicsError::InvalidInput(format!("payload must be >= 0, got {payload_kg}")));
    }
    let limit = model.torque_limit_n_m * (1.0 + 1e-12);
    if tau.iter().any(|t| !t.is_finite() || t.abs() > limit) {
        return Err(DynamicsError::InvalidInput(format!("torque command outside ±{}", model.torque_limit_n_m)));
    }
    let augmented = model.with_payload(payload_kg);
    DynamicsTerms::evaluate(&augmented, &state.q, &state.qd).acceleration(&state.qd, tau, contact, f_ext)
}

/// `τ_d = Σ_feet J_cᵀF_c + J_extᵀF_ext`.
pub fn true_generalized_disturbance(
    foot_jacobians: &[PointJacobian; NL],
    contact: &[Vec2; NL],
    ext_jacobian: &PointJacobian,
    f_ext: &Vec2,
) -> GenVec {
    let mut tau_d = ext_jacobian.transpose() * f_ext;
    for (j, f) in foot_jacobians.iter().zip(contact) {
        tau_d += j.transpose() * f;
    }
    tau_d
}
