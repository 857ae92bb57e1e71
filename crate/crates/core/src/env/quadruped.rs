use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuation::{
    compose_command, hybrid_joint_torque, position_only_torque, scale_compensation, scale_position_action,
    scale_raw_action, ActionScales, ActuatorGains,
};
use crate::dynamics::{
    contact_damping, contact_forces, integrate_semi_implicit, kinematics, true_generalized_disturbance, ContactParams, DynamicsTerms,
    GenVec, JointVec, RobotModel, State, Vec2, BASE_X, BASE_Z, JOINT_OFFSET, NA, NL, PITCH,
};
use crate::observation::{History, HYBRID_ACTION_DIM, OBS_DIM, PRIVILEGED_DIM};
use crate::observer::{observer_targets, step_with_input, ObserverConfig, ObserverState, ObserverTargets};

use super::disturbance::{force_at, sample_disturbance, DisturbanceSpec, ForceWindow};
use super::reward::{compute_reward, RewardBreakdown, RewardInputs};
use super::{EnvConfig, EnvError};

/// Normal force above which a foot counts as in contact.
const CONTACT_THRESHOLD_N: f64 = 1.0;

/// Everything that defines the simulated system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimParams {
    pub robot: RobotModel,
    pub contact: ContactParams,
    pub gains: ActuatorGains,
    pub scales: ActionScales,
    pub env: EnvConfig,
    pub observer: ObserverConfig,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), String> {
        self.robot.validate()?;
        self.contact.validate()?;
        self.env.validate()?;
        self.observer.validate()?;
        if !(self.gains.kp_n_m_per_rad >= 0.0 && self.gains.kd_n_m_s_per_rad >= 0.0) {
            return Err("actuator gains must be >= 0".into());
        }
        if !(self.scales.position_scale_rad > 0.0
            && self.scales.feedforward_scale_n_m > 0.0
            && self.scales.compensation_scale_n_m >= 0.0)
        {
            return Err("action scales must be positive".into());
        }
        Ok(())
    }

    /// The momentum observer runs once per control step.
    pub fn observer_config(&self) -> ObserverConfig {
        ObserverConfig { cutoff_rad_per_s: self.observer.cutoff_rad_per_s, sample_period_s: self.env.control_period_s }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionMode {
    /// Target positions plus feedforward torques (8 raw outputs).
    #[default]
    Hybrid,
    /// Target positions only (first 4 raw outputs).
    PositionOnly,
}

impl ActionMode {
    pub fn dim(self) -> usize {
        match self {
            ActionMode::Hybrid => HYBRID_ACTION_DIM,
            ActionMode::PositionOnly => NA,
        }
    }
}

/// Raw policy outputs for one control step. In position-only mode the last
/// four entries of `policy` are ignored.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Action {
    pub policy: [f64; HYBRID_ACTION_DIM],
    pub compensation: Option<[f64; NA]>,
}

/// Probabilities used when an episode is reset from the environment's own RNG.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Randomization {
    pub disturbance_probability: f64,
    pub payload_probability: f64,
}

impl Randomization {
    pub fn none() -> Randomization {
        Randomization { disturbance_probability: 0.0, payload_probability: 0.0 }
    }
}

/// Everything that varies between episodes.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeSetup {
    pub command_m_per_s: f64,
    pub windows: Vec<ForceWindow>,
    pub payload_kg: f64,
    /// Offsets of the initial joint angles from nominal.
    pub joint_offsets: JointVec,
}

impl EpisodeSetup {
    pub fn nominal(command_m_per_s: f64) -> EpisodeSetup {
        EpisodeSetup { command_m_per_s, windows: Vec::new(), payload_kg: 0.0, joint_offsets: JointVec::zeros() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Running,
    Fall,
    Timeout,
}

impl Termination {
    pub fn is_done(self) -> bool {
        self != Termination::Running
    }
}

/// Fall if the trunk pitches past the limit or drops too low; timeout at the
/// episode length.
pub fn check_termination(state: &State, ground_height_m: f64, cfg: &EnvConfig) -> Termination {
    if state.q[PITCH].abs() > cfg.fall_pitch_rad || state.q[BASE_Z] - ground_height_m < cfg.fall_height_m {
        Termination::Fall
    } else if state.t >= cfg.episode_length_s - 1e-9 {
        Termination::Timeout
    } else {
        Termination::Running
    }
}

/// Momentum-observer outputs for one control step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GmDiagnostics {
    /// Estimate of the full generalized disturbance `J_cᵀF_c + J_extᵀF_ext`.
    pub tau_d: GenVec,
    /// Base-translation rows of the estimate with the known contact term
    /// removed from the filter input.
    pub f_ext: Vec2,
}

/// Per-step quantities beyond observation and reward.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    /// External force averaged over the control period.
    pub f_ext: Vec2,
    /// Contact forces averaged over the control period.
    pub contact_mean: [Vec2; NL],
    /// Executed torque averaged over the control period.
    pub tau_cmd: JointVec,
    pub q_ref: JointVec,
    pub delta_tau: JointVec,
    pub targets: ObserverTargets,
    pub gm: Option<GmDiagnostics>,
    pub blowup: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub frame: [f64; OBS_DIM],
    pub privileged: [f64; PRIVILEGED_DIM],
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub termination: Termination,
    pub info: StepInfo,
}

/// One planar quadruped episode runner.
#[derive(Clone, Debug)]
pub struct Quadruped {
    params: SimParams,
    mode: ActionMode,
    randomization: Randomization,
    gm_enabled: bool,
    rng: ChaCha8Rng,
    actual_model: RobotModel,
    state: State,
    setup: EpisodeSetup,
    disturbance: DisturbanceSpec,
    history: History,
    prev_action: [f64; HYBRID_ACTION_DIM],
    tau_cmd: JointVec,
    last_contact: [Vec2; NL],
    gm_raw: ObserverState,
    gm_ext: ObserverState,
    steps: usize,
}

impl Quadruped {
    /// Environment `index` draws from stream `index` of the seeded generator.
    pub fn new(params: SimParams, mode: ActionMode, seed: u64, index: u64) -> Result<Quadruped, EnvError> {
        params.validate().map_err(EnvError::InvalidInput)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let randomization = Randomization {
            disturbance_probability: params.env.disturbance_probability,
            payload_probability: params.env.payload_probability,
        };
        let mut env = Quadruped {
            actual_model: params.robot.clone(),
            state: State::standing(0.0, params.robot.nominal_height(), &params.robot.nominal_joints()),
            params,
            mode,
            randomization,
            gm_enabled: false,
            rng,
            setup: EpisodeSetup::nominal(0.0),
            disturbance: DisturbanceSpec::inactive(),
            history: History::filled(&[0.0; OBS_DIM]),
            prev_action: [0.0; HYBRID_ACTION_DIM],
            tau_cmd: JointVec::zeros(),
            last_contact: [Vec2::zeros(); NL],
            gm_raw: ObserverState::default(),
            gm_ext: ObserverState::default(),
            steps: 0,
        };
        env.reset();
        Ok(env)
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn mode(&self) -> ActionMode {
        self.mode
    }

    pub fn set_randomization(&mut self, r: Randomization) {
        self.randomization = r;
    }

    /// Deployment gains may differ from training gains.
    pub fn set_gains(&mut self, gains: ActuatorGains) {
        self.params.gains = gains;
    }

    /// Run the momentum observer every step (costs one extra dynamics
    /// evaluation per substep when a payload is attached).
    pub fn enable_gm_observer(&mut self, on: bool) {
        self.gm_enabled = on;
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    /// Overwrite the physical state, keeping the episode definition. The
    /// history is refilled and the observer restarted from the new state.
    pub fn set_state(&mut self, state: State) {
        self.state = state;
        self.steps = (self.state.t / self.params.env.control_period_s).round() as usize;
        self.gm_raw.reset();
        self.gm_ext.reset();
        if self.gm_enabled {
            self.gm_prime();
        }
        let frame = self.frame();
        self.history = History::filled(&frame);
    }

    pub fn setup(&self) -> &EpisodeSetup {
        &self.setup
    }

    pub fn disturbance(&self) -> &DisturbanceSpec {
        &self.disturbance
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn command(&self) -> f64 {
        self.setup.command_m_per_s
    }

    /// Sample a new episode from the environment's generator and reset to it.
    pub fn reset(&mut self) -> [f64; OBS_DIM] {
        let cfg = &self.params.env;
        let rng = &mut self.rng;
        let zero_cmd = rng.gen::<f64>() < cfg.zero_command_probability;
        let cmd = rng.gen_range(cfg.command_range_m_per_s[0]..=cfg.command_range_m_per_s[1]);
        let disturbance = sample_disturbance(rng, cfg, self.randomization.disturbance_probability);
        let with_payload = rng.gen::<f64>() < self.randomization.payload_probability;
        let payload = rng.gen_range(cfg.payload_range_kg[0]..=cfg.payload_range_kg[1]);
        let noise = cfg.joint_reset_noise_rad;
        let joint_offsets = JointVec::from_fn(|_, _| if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 });
        let setup = EpisodeSetup {
            command_m_per_s: if zero_cmd { 0.0 } else { cmd },
            windows: disturbance.window().into_iter().collect(),
            payload_kg: if with_payload { payload } else { 0.0 },
            joint_offsets,
        };
        self.disturbance = disturbance;
        self.start(setup)
    }

    /// Reset to an explicit episode definition.
    pub fn reset_with(&mut self, setup: EpisodeSetup) -> Result<[f64; OBS_DIM], EnvError> {
        if !(setup.payload_kg >= 0.0) || !setup.command_m_per_s.is_finite() {
            return Err(EnvError::InvalidInput("payload must be >= 0 and command finite".into()));
        }
        self.disturbance = match setup.windows.first() {
            Some(w) => DisturbanceSpec { force: w.force, start_s: w.start_s, duration_s: w.end_s - w.start_s, active: true },
            None => DisturbanceSpec::inactive(),
        };
        Ok(self.start(setup))
    }

    fn start(&mut self, setup: EpisodeSetup) -> [f64; OBS_DIM] {
        let joints = self.params.robot.nominal_joints() + setup.joint_offsets;
        let mut state = State::standing(0.0, 0.0, &joints);
        // lowest foot exactly on the ground
        let kin = kinematics(&self.params.robot, &state.q);
        let lowest = kin.feet.iter().map(|f| f.y).fold(f64::INFINITY, f64::min);
        state.q[BASE_Z] = self.params.contact.ground_height_m - lowest;
        self.actual_model = self.params.robot.with_payload(setup.payload_kg);
        self.state = state;
        self.setup = setup;
        self.prev_action = [0.0; HYBRID_ACTION_DIM];
        self.tau_cmd = JointVec::zeros();
        self.last_contact = [Vec2::zeros(); NL];
        self.steps = 0;
        self.gm_raw.reset();
        self.gm_ext.reset();
        if self.gm_enabled {
            self.gm_prime();
        }
        let frame = self.frame();
        self.history = History::filled(&frame);
        frame
    }

    /// First observer call at the reset state: zero estimate.
    fn gm_prime(&mut self) {
        let cfg = self.params.observer_config();
        let terms = DynamicsTerms::evaluate(&self.params.robot, &self.state.q, &self.state.qd);
        let beta_p = terms.mass * self.state.qd * cfg.beta();
        step_with_input(&cfg, &mut self.gm_raw, &beta_p, &beta_p);
        step_with_input(&cfg, &mut self.gm_ext, &beta_p, &beta_p);
    }

    pub fn frame(&self) -> [f64; OBS_DIM] {
        let s = &self.state;
        let mut o = [0.0; OBS_DIM];
        o[0] = s.qd[PITCH];
        o[1] = -s.q[PITCH].sin();
        o[2] = -s.q[PITCH].cos();
        o[3] = self.setup.command_m_per_s;
        for j in 0..NA {
            o[4 + j] = s.q[JOINT_OFFSET + j];
            o[8 + j] = s.qd[JOINT_OFFSET + j];
            o[12 + j] = self.tau_cmd[j];
        }
        o[16..].copy_from_slice(&self.prev_action);
        o
    }

    pub fn privileged(&self) -> [f64; PRIVILEGED_DIM] {
        let kin = kinematics(&self.actual_model, &self.state.q);
        let ground = self.params.contact.ground_height_m;
        let f = force_at(&self.setup.windows, self.state.t);
        [
            self.state.qd[BASE_X],
            self.state.qd[BASE_Z],
            (self.last_contact[0].y > CONTACT_THRESHOLD_N) as u8 as f64,
            (self.last_contact[1].y > CONTACT_THRESHOLD_N) as u8 as f64,
            kin.feet[0].y - ground,
            kin.feet[1].y - ground,
            f.x,
            f.y,
        ]
    }

    fn clip_action(&self, action: &Action) -> ([f64; HYBRID_ACTION_DIM], Option<[f64; NA]>) {
        let c = self.params.env.raw_action_clip;
        let mut policy = action.policy.map(|a| a.clamp(-c, c));
        if self.mode == ActionMode::PositionOnly {
            policy[NA..].fill(0.0);
        }
        (policy, action.compensation.map(|d| d.map(|a| a.clamp(-1.0, 1.0))))
    }

    /// Advance one control period.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome, EnvError> {
        if action.policy.iter().chain(action.compensation.iter().flatten()).any(|a| !a.is_finite()) {
            return Err(EnvError::InvalidInput("non-finite raw action".into()));
        }
        let (raw, comp_raw) = self.clip_action(action);
        let p = &self.params;
        let q_nom = p.robot.nominal_joints();
        let limit = p.robot.torque_limit_n_m;
        let hybrid = scale_raw_action(&raw, &q_nom, &p.scales, limit);
        let q_ref = match self.mode {
            ActionMode::Hybrid => hybrid.q_ref,
            ActionMode::PositionOnly => scale_position_action(&[raw[0], raw[1], raw[2], raw[3]], &q_nom, &p.scales),
        };
        let compensation = comp_raw.map(|d| scale_compensation(&d, &p.scales));
        let n = p.env.physics_substeps;
        let h = p.env.physics_step_s();
        let prev_vel = [self.state.qd[BASE_X], self.state.qd[BASE_Z], self.state.qd[PITCH]];

        let mut tau_sum = JointVec::zeros();
        let mut contact_sum = [Vec2::zeros(); NL];
        let mut f_ext_sum = Vec2::zeros();
        let mut gm_h_sum = GenVec::zeros();
        let mut gm_contact_sum = GenVec::zeros();
        let payload = self.setup.payload_kg > 0.0;
        for _ in 0..n {
            let s = &self.state;
            let f_ext = force_at(&self.setup.windows, s.t);
            let terms = DynamicsTerms::evaluate(&self.actual_model, &s.q, &s.qd);
            let contact = contact_forces(&p.contact, &terms.feet.positions, &terms.feet.velocities);
            let (q, qd) = (s.joints(), s.joint_rates());
            let tau_hfp = match self.mode {
                ActionMode::Hybrid => hybrid_joint_torque(&hybrid, &q, &qd, &p.gains),
                ActionMode::PositionOnly => position_only_torque(&q_ref, &q, &qd, &p.gains),
            };
            let tau = compose_command(&tau_hfp, compensation.as_ref(), limit).0;
            let damping: [Vec2; NL] =
                std::array::from_fn(|i| contact_damping(&p.contact, &terms.feet.positions[i], &terms.feet.velocities[i]));
            let qdd = terms.implicit_acceleration(&s.qd, &tau, &contact, &f_ext, &damping, h).map_err(|e| EnvError::NumericalBlowup {
                t: s.t,
                reason: e.to_string(),
            })?;
            if self.gm_enabled {
                // the observer knows only the nominal model; a payload shows up as disturbance
                let nominal;
                let t = if payload {
                    nominal = DynamicsTerms::evaluate(&p.robot, &s.q, &s.qd);
                    &nominal
                } else {
                    &terms
                };
                let mut hterm = t.coriolis.transpose() * s.qd - t.gravity;
                for j in 0..NA {
                    hterm[JOINT_OFFSET + j] += tau[j];
                }
                gm_h_sum += hterm;
                gm_contact_sum +=
                    true_generalized_disturbance(&t.feet.jacobians, &contact, &crate::dynamics::external_force_jacobian(), &Vec2::zeros());
            }
            tau_sum += tau;
            for (acc, c) in contact_sum.iter_mut().zip(&contact) {
                *acc += c;
            }
            f_ext_sum += f_ext;
            integrate_semi_implicit(&mut self.state, &qdd, h);
        }
        self.steps += 1;
        // avoid drift in the accumulated time
        self.state.t = self.steps as f64 * p.env.control_period_s;
        let inv = 1.0 / n as f64;
        self.tau_cmd = tau_sum * inv;
        let contact_mean = contact_sum.map(|c| c * inv);
        let f_ext_mean = f_ext_sum * inv;

        let blowup = !self.state.is_finite() || self.state.max_abs() > p.env.blowup_threshold;
        if blowup {
            return Err(EnvError::NumericalBlowup { t: self.state.t, reason: "state exceeded the blow-up threshold".into() });
        }
        {
            let terms = DynamicsTerms::evaluate(&self.actual_model, &self.state.q, &self.state.qd);
            self.last_contact = contact_forces(&p.contact, &terms.feet.positions, &terms.feet.velocities);
        }

        let gm = if self.gm_enabled {
            let cfg = self.params.observer_config();
            let beta_p = crate::dynamics::mass_matrix(&self.params.robot, &self.state.q) * self.state.qd * cfg.beta();
            let u_raw = beta_p + gm_h_sum * inv;
            let u_ext = u_raw + gm_contact_sum * inv;
            let tau_d = step_with_input(&cfg, &mut self.gm_raw, &u_raw, &beta_p);
            let ext = step_with_input(&cfg, &mut self.gm_ext, &u_ext, &beta_p);
            Some(GmDiagnostics { tau_d, f_ext: Vec2::new(ext[BASE_X], ext[BASE_Z]) })
        } else {
            None
        };

        let base_vel = [self.state.qd[BASE_X], self.state.qd[BASE_Z], self.state.qd[PITCH]];
        let targets = observer_targets(&prev_vel, &base_vel, self.params.env.control_period_s, &contact_mean, &f_ext_mean);

        let p = &self.params;
        let joints = self.state.joints();
        let tracked = match self.mode {
            ActionMode::Hybrid => true,
            ActionMode::PositionOnly => p.env.rewards.joint_tracking_for_position_actions,
        };
        let (reward, breakdown) = compute_reward(
            &p.env.rewards,
            &RewardInputs {
                forward_velocity: self.state.qd[BASE_X],
                vertical_velocity: self.state.qd[BASE_Z],
                pitch_rate: self.state.qd[PITCH],
                gravity_x: -self.state.q[PITCH].sin(),
                height: self.state.q[BASE_Z] - p.contact.ground_height_m,
                nominal_height: p.robot.nominal_height(),
                torque: &self.tau_cmd,
                action: &raw,
                prev_action: &self.prev_action,
                command: self.setup.command_m_per_s,
                joint_targets: tracked.then_some(&q_ref),
                joints: &joints,
            },
        );
        self.prev_action = raw;
        let termination = check_termination(&self.state, p.contact.ground_height_m, &p.env);
        let frame = self.frame();
        self.history.push(&frame);
        Ok(StepOutcome {
            frame,
            privileged: self.privileged(),
            reward,
            breakdown,
            termination,
            info: StepInfo {
                f_ext: f_ext_mean,
                contact_mean,
                tau_cmd: self.tau_cmd,
                q_ref,
                delta_tau: compensation.map_or(JointVec::zeros(), |c| c.delta_tau),
                targets,
                gm,
                blowup: false,
            },
        })
    }
}
