use super::model::{ContactParams, Vec2};

/// Ground reaction on one foot: `(tangential, normal)` in world x/z.
///
/// Normal force is a one-sided spring-damper on penetration, never pulling.
/// Friction is Coulomb, smoothed by `tanh(ẋ / v_s)` so `|F_t| ≤ μ F_n`.
pub fn contact_force(params: &ContactParams, position: &Vec2, velocity: &Vec2) -> Vec2 {
    let depth = params.ground_height_m - position.y;
    if depth <= 0.0 {
        return Vec2::zeros();
    }
    let normal = (params.normal_stiffness_n_per_m * depth - params.normal_damping_n_s_per_m * velocity.y).max(0.0);
    let tangential = -params.friction_coefficient * normal * (velocity.x / params.slip_velocity_m_per_s).tanh();
    Vec2::new(tangential, normal)
}

pub fn contact_forces<const N: usize>(params: &ContactParams, positions: &[Vec2; N], velocities: &[Vec2; N]) -> [Vec2; N] {
    std::array::from_fn(|i| contact_force(params, &positions[i], &velocities[i]))
}

/// Velocity slopes `(−∂F_t/∂ẋ, −∂F_n/∂ż)` of the contact law at the given
/// state, both nonnegative. Used to treat contact damping implicitly.
pub fn contact_damping(params: &ContactParams, position: &Vec2, velocity: &Vec2) -> Vec2 {
    let depth = params.ground_height_m - position.y;
    if depth <= 0.0 {
        return Vec2::zeros();
    }
    let normal = params.normal_stiffness_n_per_m * depth - params.normal_damping_n_s_per_m * velocity.y;
    if normal <= 0.0 {
        return Vec2::zeros();
    }
    let sech = 1.0 / (velocity.x / params.slip_velocity_m_per_s).cosh();
    Vec2::new(params.friction_coefficient * normal * sech * sech / params.slip_velocity_m_per_s, params.normal_damping_n_s_per_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn foot_above_ground_is_free() {
        let p = ContactParams::default();
        let f = contact_force(&p, &Vec2::new(0.0, 0.01), &Vec2::new(1.0, -1.0));
        assert_eq!(f, Vec2::zeros());
    }

    #[test]
    fn one_millimetre_penetration() {
        let p = ContactParams::default();
        let f = contact_force(&p, &Vec2::new(0.3, -0.001), &Vec2::zeros());
        assert!((f.x - 0.0).abs() < 1e-12);
        assert!((f.y - 100.0).abs() < 1e-9, "{}", f.y);
    }

    #[test]
    fn separating_foot_never_pulls() {
        let p = ContactParams::default();
        // shallow penetration, fast upward: damping would give a negative force
        let f = contact_force(&p, &Vec2::new(0.0, -1e-4), &Vec2::new(0.0, 2.0));
        assert_eq!(f.y, 0.0);
        assert_eq!(f.x, 0.0);
    }

    #[test]
    fn damping_matches_finite_differences() {
        let p = ContactParams::default();
        let (pos, vel) = (Vec2::new(0.0, -0.002), Vec2::new(0.03, -0.1));
        let c = contact_damping(&p, &pos, &vel);
        let e = 1e-7;
        let dx = (contact_force(&p, &pos, &(vel + Vec2::new(e, 0.0))).x - contact_force(&p, &pos, &(vel - Vec2::new(e, 0.0))).x) / (2.0 * e);
        let dz = (contact_force(&p, &pos, &(vel + Vec2::new(0.0, e))).y - contact_force(&p, &pos, &(vel - Vec2::new(0.0, e))).y) / (2.0 * e);
        assert!((c.x + dx).abs() < 1e-4 * c.x, "{} {}", c.x, dx);
        assert!((c.y + dz).abs() < 1e-6 * c.y);
    }

    proptest! {
        #[test]
        fn normal_nonnegative_and_friction_bounded(
            z in -0.05f64..0.05, vx in -5.0f64..5.0, vz in -5.0f64..5.0, mu in 0.0f64..2.0,
        ) {
            let p = ContactParams { friction_coefficient: mu, ..Default::default() };
            let f = contact_force(&p, &Vec2::new(0.0, z), &Vec2::new(vx, vz));
            prop_assert!(f.y >= 0.0);
            prop_assert!(f.x.abs() <= mu * f.y + 1e-12);
        }
    }
}
