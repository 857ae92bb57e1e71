use super::model::*;

/// One rigid link's center-of-mass kinematics.
#[derive(Clone, Debug)]
pub struct LinkFrame {
    pub mass: f64,
    pub inertia: f64,
    pub com: Vec2,
    pub jacobian: PointJacobian,
    /// Angular velocity is `angular · q̇`; entries are 0 or 1 in the plane.
    pub angular: [f64; NQ],
}

/// Trunk, then thigh and shank of the front leg, then the rear leg.
pub const LINK_COUNT: usize = 5;

#[derive(Clone, Debug)]
pub struct Kinematics {
    pub links: [LinkFrame; LINK_COUNT],
    pub feet: [Vec2; NL],
    pub foot_jacobians: [PointJacobian; NL],
}

/// Leg axis direction for an absolute link angle: straight down at zero,
/// rotating counter-clockwise in the x-z plane.
#[inline]
fn axis(phi: f64) -> (Vec2, Vec2) {
    let (s, c) = phi.sin_cos();
    // direction and its derivative with respect to phi
    (Vec2::new(s, -c), Vec2::new(c, s))
}

pub fn kinematics(model: &RobotModel, q: &GenVec) -> Kinematics {
    let pitch = q[PITCH];
    let (s, c) = pitch.sin_cos();
    let base = Vec2::new(q[BASE_X], q[BASE_Z]);

    let mut trunk_jac = PointJacobian::zeros();
    trunk_jac[(0, BASE_X)] = 1.0;
    trunk_jac[(1, BASE_Z)] = 1.0;
    let mut trunk_ang = [0.0; NQ];
    trunk_ang[PITCH] = 1.0;
    let trunk = LinkFrame {
        mass: model.trunk_mass_kg,
        inertia: model.trunk_inertia_kg_m2,
        com: base,
        jacobian: trunk_jac,
        angular: trunk_ang,
    };

    let (l_t, l_s, l_b) = (model.thigh_length_m, model.shank_length_m, model.trunk_half_length_m);
    let mut legs = Vec::with_capacity(NL);
    for (leg, side) in [(0usize, 1.0), (1usize, -1.0)] {
        let hip_idx = JOINT_OFFSET + 2 * leg;
        let knee_idx = hip_idx + 1;
        let hip_offset = Vec2::new(c, s) * (side * l_b);
        let hip_offset_dpitch = Vec2::new(-s, c) * (side * l_b);
        let hip = base + hip_offset;

        let phi_t = pitch + q[hip_idx];
        let phi_s = phi_t + q[knee_idx];
        let (d_t, dd_t) = axis(phi_t);
        let (d_s, dd_s) = axis(phi_s);

        let mut base_cols = PointJacobian::zeros();
        base_cols[(0, BASE_X)] = 1.0;
        base_cols[(1, BASE_Z)] = 1.0;

        // thigh center
        let mut jt = base_cols;
        let v = hip_offset_dpitch + dd_t * (0.5 * l_t);
        jt.set_column(PITCH, &v);
        jt.set_column(hip_idx, &(dd_t * (0.5 * l_t)));
        let mut ang_t = [0.0; NQ];
        ang_t[PITCH] = 1.0;
        ang_t[hip_idx] = 1.0;
        let thigh = LinkFrame {
            mass: model.thigh_mass_kg,
            inertia: model.thigh_inertia_kg_m2,
            com: hip + d_t * (0.5 * l_t),
            jacobian: jt,
            angular: ang_t,
        };

        // shank center
        let knee = hip + d_t * l_t;
        let mut js = base_cols;
        js.set_column(PITCH, &(hip_offset_dpitch + dd_t * l_t + dd_s * (0.5 * l_s)));
        js.set_column(hip_idx, &(dd_t * l_t + dd_s * (0.5 * l_s)));
        js.set_column(knee_idx, &(dd_s * (0.5 * l_s)));
        let mut ang_s = ang_t;
        ang_s[knee_idx] = 1.0;
        let shank = LinkFrame {
            mass: model.shank_mass_kg,
            inertia: model.shank_inertia_kg_m2,
            com: knee + d_s * (0.5 * l_s),
            jacobian: js,
            angular: ang_s,
        };

        // foot
        let mut jf = base_cols;
        jf.set_column(PITCH, &(hip_offset_dpitch + dd_t * l_t + dd_s * l_s));
        jf.set_column(hip_idx, &(dd_t * l_t + dd_s * l_s));
        jf.set_column(knee_idx, &(dd_s * l_s));
        let foot = knee + d_s * l_s;
        legs.push((thigh, shank, foot, jf));
    }
    let mut it = legs.into_iter();
    let (tf, sf, ff, jff) = it.next().expect("front leg");
    let (tr, sr, fr, jfr) = it.next().expect("rear leg");
    Kinematics {
        links: [trunk, tf, sf, tr, sr],
        feet: [ff, fr],
        foot_jacobians: [jff, jfr],
    }
}

/// 2×2 Jacobian of a foot with respect to that leg's own hip and knee
/// (columns of the full foot Jacobian).
pub fn leg_jacobian(foot_jacobian: &PointJacobian, leg: usize) -> nalgebra::Matrix2<f64> {
    let hip = JOINT_OFFSET + 2 * leg;
    nalgebra::Matrix2::from_columns(&[foot_jacobian.column(hip).into_owned(), foot_jacobian.column(hip + 1).into_owned()])
}
