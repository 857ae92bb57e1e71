//! Brute-force rigid-body references, written independently
//! of the library's kinematics.

use hfplp::dynamics::{forward_dynamics, GenMat, GenVec, JointVec, RobotModel, State, Vec2, JOINT_OFFSET, NA, NL};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Frame = [[f64; 3]; 3];

fn mul(a: &Frame, b: &Frame) -> Frame {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn rot(a: f64) -> Frame {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn trans(x: f64, z: f64) -> Frame {
    [[1.0, 0.0, x], [0.0, 1.0, z], [0.0, 0.0, 1.0]]
}

fn origin(f: &Frame) -> [f64; 2] {
    [f[0][2], f[1][2]]
}

/// (mass, inertia, com position, absolute angle) for every link.
pub fn links(model: &RobotModel, q: &GenVec) -> Vec<(f64, f64, [f64; 2], f64)> {
    let base = mul(&trans(q[0], q[1]), &rot(q[2]));
    let mut out = vec![(model.trunk_mass_kg, model.trunk_inertia_kg_m2, origin(&base), q[2])];
    for (leg, side) in [(0, 1.0), (1, -1.0)] {
        let hip = mul(&mul(&base, &trans(side * model.trunk_half_length_m, 0.0)), &rot(q[3 + 2 * leg]));
        let thigh_c = mul(&hip, &trans(0.0, -0.5 * model.thigh_length_m));
        let knee = mul(&mul(&hip, &trans(0.0, -model.thigh_length_m)), &rot(q[4 + 2 * leg]));
        let shank_c = mul(&knee, &trans(0.0, -0.5 * model.shank_length_m));
        out.push((model.thigh_mass_kg, model.thigh_inertia_kg_m2, origin(&thigh_c), q[2] + q[3 + 2 * leg]));
        out.push((model.shank_mass_kg, model.shank_inertia_kg_m2, origin(&shank_c), q[2] + q[3 + 2 * leg] + q[4 + 2 * leg]));
    }
    out
}

pub fn feet(model: &RobotModel, q: &GenVec) -> [[f64; 2]; 2] {
    let base = mul(&trans(q[0], q[1]), &rot(q[2]));
    let mut out = [[0.0; 2]; 2];
    for (leg, side) in [(0usize, 1.0), (1usize, -1.0)] {
        let hip = mul(&mul(&base, &trans(side * model.trunk_half_length_m, 0.0)), &rot(q[3 + 2 * leg]));
        let knee = mul(&mul(&hip, &trans(0.0, -model.thigh_length_m)), &rot(q[4 + 2 * leg]));
        out[leg] = origin(&mul(&knee, &trans(0.0, -model.shank_length_m)));
    }
    out
}

/// Richardson-extrapolated central difference of `f` at `t = 0`.
pub fn derivative<const N: usize>(f: impl Fn(f64) -> [f64; N], h: f64) -> [f64; N] {
    let d = |h: f64| {
        let (a, b) = (f(h), f(-h));
        std::array::from_fn::<f64, N, _>(|i| (a[i] - b[i]) / (2.0 * h))
    };
    let (d1, d2) = (d(h), d(0.5 * h));
    std::array::from_fn(|i| (4.0 * d2[i] - d1[i]) / 3.0)
}

pub fn point_velocity(model: &RobotModel, q: &GenVec, qd: &GenVec, link: usize) -> [f64; 2] {
    derivative(|t| links(model, &(q + qd * t))[link].2, 1e-3)
}

pub fn foot_velocity(model: &RobotModel, q: &GenVec, qd: &GenVec, foot: usize) -> [f64; 2] {
    derivative(|t| feet(model, &(q + qd * t))[foot], 1e-3)
}

pub fn kinetic(model: &RobotModel, q: &GenVec, qd: &GenVec) -> f64 {
    let ls = links(model, q);
    let angles: Vec<f64> = derivative::<5>(
        |t| {
            let l = links(model, &(q + qd * t));
            std::array::from_fn(|i| l[i].3)
        },
        1e-3,
    )
    .to_vec();
    ls.iter()
        .enumerate()
        .map(|(i, (m, inertia, _, _))| {
            let v = point_velocity(model, q, qd, i);
            0.5 * m * (v[0] * v[0] + v[1] * v[1]) + 0.5 * inertia * angles[i] * angles[i]
        })
        .sum()
}

pub fn potential(model: &RobotModel, q: &GenVec) -> f64 {
    links(model, q).iter().map(|(m, _, p, _)| m * model.gravity_m_per_s2 * p[1]).sum()
}

/// Mass matrix by polarization of the brute-force kinetic energy.
pub fn mass(model: &RobotModel, q: &GenVec) -> GenMat {
    let e = |i: usize| GenVec::from_fn(|k, _| if k == i { 1.0 } else { 0.0 });
    let diag: Vec<f64> = (0..7).map(|i| kinetic(model, q, &e(i))).collect();
    GenMat::from_fn(|i, j| {
        if i == j {
            2.0 * diag[i]
        } else {
            kinetic(model, q, &(e(i) + e(j))) - diag[i] - diag[j]
        }
    })
}

pub fn random_q(rng: &mut ChaCha8Rng) -> GenVec {
    GenVec::from_fn(|i, _| match i {
        0 => rng.gen_range(-2.0..2.0),
        1 => rng.gen_range(0.1..0.6),
        2 => rng.gen_range(-0.8..0.8),
        _ => rng.gen_range(-1.5..1.5),
    })
}

pub fn random_qd(rng: &mut ChaCha8Rng) -> GenVec {
    GenVec::from_fn(|_, _| rng.gen_range(-3.0..3.0))
}

/// Relative power-balance error for one random state.
pub fn power_balance_error(model: &RobotModel, rng: &mut ChaCha8Rng) -> f64 {
    let q = random_q(rng);
    let qd = random_qd(rng);
    let tau = JointVec::from_fn(|_, _| rng.gen_range(-30.0..30.0));
    let fc = [Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(0.0..150.0)), Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(0.0..150.0))];
    let f_ext = Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-200.0..0.0));
    let payload = rng.gen_range(0.0..10.0);
    let state = State { q, qd, t: 0.0 };
    let qdd = forward_dynamics(model, &state, &tau, &fc, &f_ext, payload).unwrap();
    let heavy = model.with_payload(payload);
    let energy_rate = derivative::<1>(
        |t| [kinetic(&heavy, &(q + qd * t), &(qd + qdd * t)) + potential(&heavy, &(q + qd * t))],
        1e-4,
    )[0];
    let joint_power: Vec<f64> = (0..NA).map(|j| tau[j] * qd[JOINT_OFFSET + j]).collect();
    let mut terms = joint_power;
    for foot in 0..NL {
        let v = foot_velocity(&heavy, &q, &qd, foot);
        terms.push(fc[foot].x * v[0] + fc[foot].y * v[1]);
    }
    let v_com = point_velocity(&heavy, &q, &qd, 0);
    terms.push(f_ext.x * v_com[0] + f_ext.y * v_com[1]);
    let injected: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>().max(1e-6);
    (energy_rate - injected).abs() / scale
}
