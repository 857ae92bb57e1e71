use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuation::ActuatorGains;
use crate::dynamics::{JointVec, Vec2};
use crate::env::{EpisodeSetup, ForceWindow, SimParams};

use super::EvalError;

/// Impact pulses last this long; the force is impulse / duration.
pub const IMPACT_PULSE_S: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioKind {
    Nominal,
    Payload { payload_kg: f64 },
    /// Constant force on the trunk for the whole episode.
    ConstantPull { force_x_n: f64, force_z_n: f64 },
    /// Short pulse along x; the sign of the impulse sets the direction.
    Impact { impulse_x_n_s: f64, onset_s: f64 },
    /// Deployment gains differ from the training gains.
    PdMismatch { kp_n_m_per_rad: f64, kd_n_m_s_per_rad: f64 },
    /// Piecewise-constant x force cycling 0, +A, −A every `interval_s`.
    SquareWave { amplitude_n: f64, interval_s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub command_m_per_s: f64,
    /// Episode length override; the env default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    /// One trial per seed.
    pub seeds: Vec<u64>,
}

impl Scenario {
    pub fn new(name: &str, kind: ScenarioKind, command_m_per_s: f64, seeds: Vec<u64>) -> Scenario {
        Scenario { name: name.to_string(), kind, command_m_per_s, duration_s: None, seeds }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidScenario(format!("{}: {m}", self.name)));
        if self.name.is_empty() || self.name.contains(['\t', '\n', '/']) {
            return bad("name must be non-empty without tabs, newlines or slashes".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if !self.command_m_per_s.is_finite() {
            return bad("command must be finite".into());
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("duration_s must be > 0, got {d}"));
            }
        }
        let ok = match &self.kind {
            ScenarioKind::Nominal => true,
            ScenarioKind::Payload { payload_kg } => *payload_kg >= 0.0 && payload_kg.is_finite(),
            ScenarioKind::ConstantPull { force_x_n, force_z_n } => force_x_n.is_finite() && force_z_n.is_finite(),
            ScenarioKind::Impact { impulse_x_n_s, onset_s } => impulse_x_n_s.is_finite() && *onset_s >= 0.0,
            ScenarioKind::PdMismatch { kp_n_m_per_rad, kd_n_m_s_per_rad } => *kp_n_m_per_rad >= 0.0 && *kd_n_m_s_per_rad >= 0.0,
            ScenarioKind::SquareWave { amplitude_n, interval_s } => amplitude_n.is_finite() && *interval_s > 0.0,
        };
        if !ok {
            return bad(format!("invalid parameters {:?}", self.kind));
        }
        Ok(())
    }

    /// Simulator parameters for this scenario derived from the training ones.
    pub fn sim_params(&self, base: &SimParams) -> SimParams {
        let mut p = base.clone();
        if let Some(d) = self.duration_s {
            p.env.episode_length_s = d;
            // episodes here never sample disturbances; keep the sampling range consistent
            let r = &mut p.env.disturbance_duration_range_s;
            *r = [r[0].min(d), r[1].min(d)];
        }
        p
    }

    pub fn gains(&self, base: &SimParams) -> ActuatorGains {
        match self.kind {
            ScenarioKind::PdMismatch { kp_n_m_per_rad, kd_n_m_s_per_rad } => ActuatorGains { kp_n_m_per_rad, kd_n_m_s_per_rad },
            _ => base.gains,
        }
    }

    /// Episode definition for one trial. Depends only on the scenario and the
    /// seed, so every method sees the same schedule and initial pose.
    pub fn episode(&self, seed: u64, params: &SimParams) -> EpisodeSetup {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = params.env.joint_reset_noise_rad;
        let joint_offsets = JointVec::from_fn(|_, _| if noise > 0.0 { rng.gen_range(-noise..=noise) } else { 0.0 });
        let length = self.duration_s.unwrap_or(params.env.episode_length_s);
        let mut setup = EpisodeSetup { joint_offsets, ..EpisodeSetup::nominal(self.command_m_per_s) };
        match self.kind {
            ScenarioKind::Nominal | ScenarioKind::PdMismatch { .. } => {}
            ScenarioKind::Payload { payload_kg } => setup.payload_kg = payload_kg,
            ScenarioKind::ConstantPull { force_x_n, force_z_n } => {
                setup.windows.push(ForceWindow { start_s: 0.0, end_s: length + 1.0, force: Vec2::new(force_x_n, force_z_n) })
            }
            ScenarioKind::Impact { impulse_x_n_s, onset_s } => {
                if impulse_x_n_s != 0.0 {
                    setup.windows.push(ForceWindow {
                        start_s: onset_s,
                        end_s: onset_s + IMPACT_PULSE_S,
                        force: Vec2::new(impulse_x_n_s / IMPACT_PULSE_S, 0.0),
                    })
                }
            }
            ScenarioKind::SquareWave { amplitude_n, interval_s } => {
                let mut k = 0usize;
                while (k as f64) * interval_s < length {
                    let level = [0.0, amplitude_n, -amplitude_n][k % 3];
                    if level != 0.0 {
                        let start_s = k as f64 * interval_s;
                        setup.windows.push(ForceWindow { start_s, end_s: start_s + interval_s, force: Vec2::new(level, 0.0) });
                    }
                    k += 1;
                }
            }
        }
        setup
    }
}
