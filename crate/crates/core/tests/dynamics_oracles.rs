mod common;

use common::dynamics as oracle;

use hfplp::dynamics::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: &GenMat, b: &GenMat) -> f64 {
    (a - b).amax() / b.amax().max(1e-12)
}

#[test]
fn mass_matrix_matches_kinetic_energy_hessian() {
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let q = oracle::random_q(&mut rng);
        let err = rel(&mass_matrix(&model, &q), &oracle::mass(&model, &q));
        assert!(err < 1e-6, "relative error {err}");
    }
}

#[test]
fn m_dot_minus_two_c_is_skew() {
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let q = oracle::random_q(&mut rng);
        let qd = oracle::random_qd(&mut rng);
        let h = 1e-6;
        let m_dot = (mass_matrix(&model, &(q + qd * h)) - mass_matrix(&model, &(q - qd * h))) / (2.0 * h);
        let n = m_dot - coriolis_matrix(&model, &q, &qd) * 2.0;
        let asym = (n + n.transpose()).amax();
        assert!(asym < 1e-6, "{asym}");
    }
}

#[test]
fn coriolis_force_matches_inverse_dynamics() {
    // τ = d/dt(∂T/∂q̇) − ∂T/∂q at q̈ = 0 with gravity off
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let q = oracle::random_q(&mut rng);
        let qd = oracle::random_qd(&mut rng);
        let momentum_rate = oracle::derivative::<7>(
            |t| {
                let p = oracle::mass(&model, &(q + qd * t)) * qd;
                std::array::from_fn(|i| p[i])
            },
            1e-3,
        );
        let mut expected = GenVec::from_column_slice(&momentum_rate);
        for k in 0..NQ {
            let mut e = GenVec::zeros();
            e[k] = 1.0;
            let dt_dq = oracle::derivative::<1>(|s| [oracle::kinetic(&model, &(q + e * s), &qd)], 1e-3)[0];
            expected[k] -= dt_dq;
        }
        let got = coriolis_matrix(&model, &q, &qd) * qd;
        let err = (got - expected).amax() / expected.amax().max(1e-9);
        assert!(err < 1e-5, "relative error {err}: {got} vs {expected}");
    }
}

#[test]
fn gravity_is_potential_gradient() {
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let q = oracle::random_q(&mut rng);
        let g = gravity_vector(&model, &q);
        let grad = GenVec::from_fn(|k, _| {
            let mut e = GenVec::zeros();
            e[k] = 1.0;
            oracle::derivative::<1>(|s| [oracle::potential(&model, &(q + e * s))], 1e-4)[0]
        });
        let err = (g - grad).amax() / grad.amax();
        assert!(err < 1e-6, "{err}");
    }
}

#[test]
fn foot_jacobian_matches_finite_differences() {
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let q = oracle::random_q(&mut rng);
        let qd = oracle::random_qd(&mut rng);
        let fk = foot_kinematics(&model, &q, &qd);
        for foot in 0..NL {
            assert!((fk.jacobians[foot] * qd - fk.velocities[foot]).amax() == 0.0);
            for k in 0..NQ {
                let mut e = GenVec::zeros();
                e[k] = 1.0;
                let col = oracle::derivative::<2>(|s| oracle::feet(&model, &(q + e * s))[foot], 1e-4);
                assert!((fk.jacobians[foot][(0, k)] - col[0]).abs() < 1e-6);
                assert!((fk.jacobians[foot][(1, k)] - col[1]).abs() < 1e-6);
            }
            let p = oracle::feet(&model, &q)[foot];
            assert!((fk.positions[foot] - Vec2::new(p[0], p[1])).amax() < 1e-12);
        }
    }
}

#[test]
fn power_balance_on_random_states() {
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let err = oracle::power_balance_error(&model, &mut rng);
        assert!(err < 1e-5, "{err}");
    }
}

/// Largest energy excursion over one simulated second of a passive fall,
/// relative to the peak kinetic energy reached.
pub fn passive_energy_drift(model: &RobotModel, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = State::standing(0.0, 2.0, &model.nominal_joints());
    state.qd = oracle::random_qd(&mut rng);
    let e = |s: &State| kinetic_energy(model, &s.q, &s.qd) + potential_energy(model, &s.q);
    let e0 = e(&state);
    let (mut drift, mut peak_t) = (0.0_f64, 0.0_f64);
    let zero = [Vec2::zeros(); NL];
    for _ in 0..10_000 {
        let qdd = forward_dynamics(model, &state, &JointVec::zeros(), &zero, &Vec2::zeros(), 0.0).unwrap();
        integrate_semi_implicit(&mut state, &qdd, 1e-4);
        drift = drift.max((e(&state) - e0).abs());
        peak_t = peak_t.max(kinetic_energy(model, &state.q, &state.qd));
    }
    drift / peak_t
}

#[test]
fn passive_energy_is_conserved() {
    let model = RobotModel::default();
    for seed in 0..3 {
        let d = passive_energy_drift(&model, seed);
        assert!(d < 0.005, "seed {seed}: drift {d}");
    }
}
