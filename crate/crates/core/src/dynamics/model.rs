use nalgebra::{SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

/// Number of generalized coordinates: base x, base z, base pitch, then hip/knee per leg.
pub const NQ: usize = 7;
/// Number of actuated joints.
pub const NA: usize = 4;
/// Number of legs.
pub const NL: usize = 2;

pub const BASE_X: usize = 0;
pub const BASE_Z: usize = 1;
pub const PITCH: usize = 2;
/// First actuated coordinate. Joints occupy `JOINT_OFFSET..NQ`, ordered
/// front hip, front knee, rear hip, rear knee.
pub const JOINT_OFFSET: usize = 3;

pub type GenVec = SVector<f64, NQ>;
pub type GenMat = SMatrix<f64, NQ, NQ>;
pub type JointVec = SVector<f64, NA>;
pub type Vec2 = Vector2<f64>;
/// Jacobian of a planar point (x, z) with respect to the generalized coordinates.
pub type PointJacobian = SMatrix<f64, 2, NQ>;
/// Selection matrix mapping actuator torques into generalized forces (`Sᵀτ`).
pub type Selection = SMatrix<f64, NQ, NA>;

/// Planar sagittal quadruped: a floating trunk with two hip/knee legs.
///
/// Hips sit at `±trunk_half_length_m` along the trunk axis; each leg is a
/// thigh and shank with centers of mass at the link midpoints and a point foot
/// at the shank tip. Zero joint angles point both links straight down the
/// trunk's negative z axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotModel {
    pub trunk_mass_kg: f64,
    pub thigh_mass_kg: f64,
    pub shank_mass_kg: f64,
    pub thigh_length_m: f64,
    pub shank_length_m: f64,
    pub trunk_half_length_m: f64,
    pub trunk_inertia_kg_m2: f64,
    pub thigh_inertia_kg_m2: f64,
    pub shank_inertia_kg_m2: f64,
    pub gravity_m_per_s2: f64,
    pub torque_limit_n_m: f64,
    pub nominal_joint_angles_rad: [f64; NA],
}

impl Default for RobotModel {
    fn default() -> Self {
        let (m_b, m_t, m_s) = (10.0, 1.0, 0.5);
        let (l_t, l_s, l_b) = (0.2, 0.2, 0.35);
        Self {
            trunk_mass_kg: m_b,
            thigh_mass_kg: m_t,
            shank_mass_kg: m_s,
            thigh_length_m: l_t,
            shank_length_m: l_s,
            trunk_half_length_m: l_b,
            // slender box 0.7 m x 0.1 m
            trunk_inertia_kg_m2: m_b * ((2.0 * l_b) * (2.0 * l_b) + 0.01) / 12.0,
            thigh_inertia_kg_m2: m_t * l_t * l_t / 12.0,
            shank_inertia_kg_m2: m_s * l_s * l_s / 12.0,
            gravity_m_per_s2: 9.81,
            torque_limit_n_m: 30.0,
            nominal_joint_angles_rad: [0.6, -1.2, 0.6, -1.2],
        }
    }
}

impl RobotModel {
    pub fn total_mass(&self) -> f64 {
        self.trunk_mass_kg + 2.0 * (self.thigh_mass_kg + self.shank_mass_kg)
    }

    /// Model with `payload_kg` rigidly attached at the trunk center of mass.
    /// Trunk inertia scales with the trunk mass.
    pub fn with_payload(&self, payload_kg: f64) -> RobotModel {
        let mut m = self.clone();
        if payload_kg > 0.0 {
            let ratio = (self.trunk_mass_kg + payload_kg) / self.trunk_mass_kg;
            m.trunk_mass_kg += payload_kg;
            m.trunk_inertia_kg_m2 *= ratio;
        }
        m
    }

    pub fn nominal_joints(&self) -> JointVec {
        JointVec::from_column_slice(&self.nominal_joint_angles_rad)
    }

    /// Base height at which both feet touch z = 0 with the nominal joint
    /// angles and a level trunk.
    pub fn nominal_height(&self) -> f64 {
        let q = self.nominal_joint_angles_rad;
        let front = self.thigh_length_m * q[0].cos() + self.shank_length_m * (q[0] + q[1]).cos();
        let rear = self.thigh_length_m * q[2].cos() + self.shank_length_m * (q[2] + q[3]).cos();
        0.5 * (front + rear)
    }

    /// `Sᵀ`: identity on the joint rows, zero on the floating-base rows.
    pub fn selection(&self) -> Selection {
        let mut s = Selection::zeros();
        for j in 0..NA {
            s[(JOINT_OFFSET + j, j)] = 1.0;
        }
        s
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("trunk_mass_kg", self.trunk_mass_kg),
            ("thigh_mass_kg", self.thigh_mass_kg),
            ("shank_mass_kg", self.shank_mass_kg),
            ("thigh_length_m", self.thigh_length_m),
            ("shank_length_m", self.shank_length_m),
            ("trunk_half_length_m", self.trunk_half_length_m),
            ("trunk_inertia_kg_m2", self.trunk_inertia_kg_m2),
            ("thigh_inertia_kg_m2", self.thigh_inertia_kg_m2),
            ("shank_inertia_kg_m2", self.shank_inertia_kg_m2),
            ("gravity_m_per_s2", self.gravity_m_per_s2),
            ("torque_limit_n_m", self.torque_limit_n_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if self.nominal_joint_angles_rad.iter().any(|v| !v.is_finite()) {
            return Err("nominal_joint_angles_rad must be finite".into());
        }
        Ok(())
    }
}

/// Generalized position and velocity plus simulation time.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub q: GenVec,
    pub qd: GenVec,
    pub t: f64,
}

impl State {
    /// Level trunk at `(x, height)` with the given joint angles and zero velocity.
    pub fn standing(x: f64, height: f64, joints: &JointVec) -> State {
        let mut q = GenVec::zeros();
        q[BASE_X] = x;
        q[BASE_Z] = height;
        q.fixed_rows_mut::<NA>(JOINT_OFFSET).copy_from(joints);
        State { q, qd: GenVec::zeros(), t: 0.0 }
    }

    pub fn joints(&self) -> JointVec {
        self.q.fixed_rows::<NA>(JOINT_OFFSET).into_owned()
    }

    pub fn joint_rates(&self) -> JointVec {
        self.qd.fixed_rows::<NA>(JOINT_OFFSET).into_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite()) && self.t.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().chain(self.qd.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Penalty ground contact with tanh-regularized Coulomb friction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactParams {
    pub normal_stiffness_n_per_m: f64,
    pub normal_damping_n_s_per_m: f64,
    pub friction_coefficient: f64,
    pub slip_velocity_m_per_s: f64,
    pub ground_height_m: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            normal_stiffness_n_per_m: 1e5,
            normal_damping_n_s_per_m: 300.0,
            friction_coefficient: 0.8,
            slip_velocity_m_per_s: 0.05,
            ground_height_m: 0.0,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.normal_stiffness_n_per_m > 0.0) {
            return Err("normal_stiffness_n_per_m must be > 0".into());
        }
        if !(self.normal_damping_n_s_per_m > 0.0) {
            return Err("normal_damping_n_s_per_m must be > 0".into());
        }
        if !(self.slip_velocity_m_per_s > 0.0) {
            return Err("slip_velocity_m_per_s must be > 0".into());
        }
        if !(self.friction_coefficient >= 0.0) {
            return Err("friction_coefficient must be >= 0".into());
        }
        if !self.ground_height_m.is_finite() {
            return Err("ground_height_m must be finite".into());
        }
        Ok(())
    }
}
