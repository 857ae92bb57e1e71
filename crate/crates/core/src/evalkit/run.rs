use serde::{Deserialize, Serialize};

use crate::dynamics::{kinematics, leg_jacobian, Vec2, NA, NL, NQ};
use crate::env::{ActionMode, Quadruped, SimParams, Termination};
use crate::observer::{foot_force_from_compensation, DEFAULT_SINGULAR_EPS};
use crate::par::{self, Execution};
use crate::trainer::{decide, PolicyStack};

use super::metrics::{absolute_tracking_error, peak_displacement, Metrics};
use super::scenario::{Scenario, ScenarioKind};
use super::EvalError;

/// A policy stack and whether its compensation stage is used.
#[derive(Clone, Copy, Debug)]
pub struct Controller<'a> {
    pub stack: &'a PolicyStack,
    pub compensate: bool,
}

impl<'a> Controller<'a> {
    pub fn new(stack: &'a PolicyStack, compensate: bool) -> Controller<'a> {
        Controller { stack, compensate: compensate && stack.daac.is_some() }
    }

    /// Short label used in tables and trace file names.
    pub fn label(&self) -> &'static str {
        match (self.stack.mode, self.compensate, self.stack.daac.as_ref().map(|d| d.use_observer)) {
            (ActionMode::PositionOnly, _, _) => "position-only",
            (ActionMode::Hybrid, false, _) => "hfplp",
            (ActionMode::Hybrid, true, Some(false)) => "hfplp-daac-no-observer",
            (ActionMode::Hybrid, true, _) => "hfplp-daac",
        }
    }
}

/// One control step of a trial. Row 0 is the initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub t: f64,
    pub command_m_per_s: f64,
    pub q: [f64; NQ],
    pub qd: [f64; NQ],
    pub tau_cmd: [f64; NA],
    pub delta_tau: [f64; NA],
    /// Momentum-observer estimate of the generalized disturbance.
    pub tau_d_hat: [f64; NQ],
    /// Momentum-observer base force with the contact term removed.
    pub f_ext_gm: [f64; 2],
    /// Learned-observer estimate used by the policy for this step.
    pub f_ext_est: [f64; 2],
    pub f_ext_true: [f64; 2],
    pub stance: [bool; NL],
    /// `J⁻ᵀΔτ` summed over stance legs.
    pub f_ee_stance: [f64; 2],
    pub reward: f64,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub success: bool,
    pub ate: f64,
    pub pd: f64,
    pub steps: usize,
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub method: String,
    pub metrics: Metrics,
    pub trials: Vec<TrialResult>,
}

fn arr<const N: usize>(v: impl IntoIterator<Item = f64>) -> [f64; N] {
    let mut out = [0.0; N];
    for (o, x) in out.iter_mut().zip(v) {
        *o = x;
    }
    out
}

/// Run one seeded trial to timeout or fall.
pub fn run_trial(ctrl: Controller<'_>, scenario: &Scenario, base: &SimParams, seed: u64) -> Result<TrialResult, EvalError> {
    let params = scenario.sim_params(base);
    let mut env = Quadruped::new(params.clone(), ctrl.stack.mode, seed, 0)?;
    env.set_gains(scenario.gains(base));
    env.enable_gm_observer(true);
    env.reset_with(scenario.episode(seed, &params))?;
    let s = env.state();
    let mut trace = vec![TraceRecord {
        step: 0,
        t: s.t,
        command_m_per_s: env.command(),
        q: arr(s.q.iter().copied()),
        qd: arr(s.qd.iter().copied()),
        tau_cmd: [0.0; NA],
        delta_tau: [0.0; NA],
        tau_d_hat: [0.0; NQ],
        f_ext_gm: [0.0; 2],
        f_ext_est: [0.0; 2],
        f_ext_true: [0.0; 2],
        stance: [false; NL],
        f_ee_stance: [0.0; 2],
        reward: 0.0,
        termination: Termination::Running,
    }];
    let mut termination = Termination::Running;
    while !termination.is_done() {
        let d = decide(ctrl.stack, std::slice::from_ref(&env), ctrl.compensate)?;
        let out = match env.step(&d.actions[0]) {
            Ok(o) => o,
            // a blow-up is a failed trial, not an aborted evaluation
            Err(crate::env::EnvError::NumericalBlowup { .. }) => {
                termination = Termination::Fall;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        termination = out.termination;
        let s = env.state();
        let stance: [bool; NL] = std::array::from_fn(|i| out.info.contact_mean[i].y > 1.0);
        let kin = kinematics(&params.robot, &s.q);
        let mut f_ee = Vec2::zeros();
        for leg in 0..NL {
            if !stance[leg] {
                continue;
            }
            let dt = Vec2::new(out.info.delta_tau[2 * leg], out.info.delta_tau[2 * leg + 1]);
            // near-singular legs contribute nothing rather than a huge force
            if let Ok(f) = foot_force_from_compensation(&dt, &leg_jacobian(&kin.foot_jacobians[leg], leg), DEFAULT_SINGULAR_EPS) {
                f_ee += f;
            }
        }
        let gm = out.info.gm.unwrap_or_default();
        trace.push(TraceRecord {
            step: env.steps(),
            t: s.t,
            command_m_per_s: env.command(),
            q: arr(s.q.iter().copied()),
            qd: arr(s.qd.iter().copied()),
            tau_cmd: arr(out.info.tau_cmd.iter().copied()),
            delta_tau: arr(out.info.delta_tau.iter().copied()),
            tau_d_hat: arr(gm.tau_d.iter().copied()),
            f_ext_gm: [gm.f_ext.x, gm.f_ext.y],
            f_ext_est: [d.f_est[0].x, d.f_est[0].y],
            f_ext_true: [out.info.f_ext.x, out.info.f_ext.y],
            stance,
            f_ee_stance: [f_ee.x, f_ee.y],
            reward: out.reward,
            termination,
        });
    }
    Ok(TrialResult {
        seed,
        success: termination == Termination::Timeout,
        ate: absolute_tracking_error(&trace),
        pd: peak_displacement(&trace),
        steps: trace.len() - 1,
        trace,
    })
}

/// Every seed of a scenario; trials run independently and are collected in seed order.
pub fn run_scenario(ctrl: Controller<'_>, scenario: &Scenario, base: &SimParams, exec: Execution) -> Result<ScenarioResult, EvalError> {
    scenario.validate()?;
    let trials = par::map_range(exec, scenario.seeds.len(), |i| run_trial(ctrl, scenario, base, scenario.seeds[i]));
    let trials = trials.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioResult { scenario: scenario.clone(), method: ctrl.label().to_string(), metrics: Metrics::from_trials(&trials), trials })
}

/// One scenario per payload, named `<name>@<kg>kg`.
pub fn payload_sweep(
    ctrl: Controller<'_>,
    base_scenario: &Scenario,
    payloads_kg: &[f64],
    params: &SimParams,
    exec: Execution,
) -> Result<Vec<ScenarioResult>, EvalError> {
    if payloads_kg.windows(2).any(|w| w[1] < w[0]) {
        return Err(EvalError::InvalidScenario("payload list must be ascending".into()));
    }
    payloads_kg
        .iter()
        .map(|&kg| {
            let s = Scenario {
                name: format!("{}@{kg}kg", base_scenario.name),
                kind: ScenarioKind::Payload { payload_kg: kg },
                ..base_scenario.clone()
            };
            run_scenario(ctrl, &s, params, exec)
        })
        .collect()
}

/// One scenario per deployment gain pair, named `<name>@kp<kp>`.
pub fn pd_mismatch_sweep(
    ctrl: Controller<'_>,
    base_scenario: &Scenario,
    gains: &[(f64, f64)],
    params: &SimParams,
    exec: Execution,
) -> Result<Vec<ScenarioResult>, EvalError> {
    gains
        .iter()
        .map(|&(kp, kd)| {
            let s = Scenario {
                name: format!("{}@kp{kp}", base_scenario.name),
                kind: ScenarioKind::PdMismatch { kp_n_m_per_rad: kp, kd_n_m_s_per_rad: kd },
                ..base_scenario.clone()
            };
            run_scenario(ctrl, &s, params, exec)
        })
        .collect()
}
