//! The workbench configuration file: one TOML document with a section per
//! subsystem. Missing keys take their defaults; unknown keys are errors that
//! name the offending path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuation::{ActionScales, ActuatorGains};
use crate::dynamics::{ContactParams, RobotModel};
use crate::env::{EnvConfig, SimParams};
use crate::evalkit::{Scenario, ScenarioKind};
use crate::observer::ObserverConfig;
use crate::trainer::{digest, PpoConfig};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("config key `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Joint PD gains and action scaling. The torque limit lives with the robot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorSection {
    pub kp_n_m_per_rad: f64,
    pub kd_n_m_s_per_rad: f64,
    pub position_scale_rad: f64,
    pub feedforward_scale_n_m: f64,
    pub compensation_scale_n_m: f64,
}

impl Default for ActuatorSection {
    fn default() -> Self {
        let (g, s) = (ActuatorGains::default(), ActionScales::default());
        Self {
            kp_n_m_per_rad: g.kp_n_m_per_rad,
            kd_n_m_s_per_rad: g.kd_n_m_s_per_rad,
            position_scale_rad: s.position_scale_rad,
            feedforward_scale_n_m: s.feedforward_scale_n_m,
            compensation_scale_n_m: s.compensation_scale_n_m,
        }
    }
}

impl ActuatorSection {
    pub fn gains(&self) -> ActuatorGains {
        ActuatorGains { kp_n_m_per_rad: self.kp_n_m_per_rad, kd_n_m_s_per_rad: self.kd_n_m_s_per_rad }
    }

    pub fn scales(&self) -> ActionScales {
        ActionScales {
            position_scale_rad: self.position_scale_rad,
            feedforward_scale_n_m: self.feedforward_scale_n_m,
            compensation_scale_n_m: self.compensation_scale_n_m,
        }
    }
}

/// Evaluation protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// One trial per seed in every scenario.
    pub seeds: Vec<u64>,
    pub command_m_per_s: f64,
    pub payloads_kg: Vec<f64>,
    pub kp_sweep_n_m_per_rad: Vec<f64>,
    pub pull_force_n: f64,
    pub push_force_n: f64,
    pub impulses_n_s: Vec<f64>,
    pub impact_onset_s: f64,
    pub square_wave_amplitude_n: f64,
    pub square_wave_interval_s: f64,
    pub diagnostics_duration_s: f64,
    /// Extra named scenarios runnable by name.
    pub scenarios: Vec<Scenario>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            seeds: vec![101, 102, 103, 104, 105],
            command_m_per_s: 1.0,
            payloads_kg: vec![0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0],
            kp_sweep_n_m_per_rad: vec![10.0, 20.0, 40.0],
            pull_force_n: 40.0,
            push_force_n: 60.0,
            impulses_n_s: vec![5.0, 10.0, 15.0, 20.0],
            impact_onset_s: 3.0,
            square_wave_amplitude_n: 100.0,
            square_wave_interval_s: 5.0,
            diagnostics_duration_s: 20.0,
            scenarios: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: PathBuf,
    pub checkpoint_every: usize,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("runs"), checkpoint_every: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub seed: u64,
    pub robot: RobotModel,
    pub contact: ContactParams,
    pub actuator: ActuatorSection,
    pub observer: ObserverConfig,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub eval: EvalSection,
    pub io: IoSection,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            robot: RobotModel::default(),
            contact: ContactParams::default(),
            actuator: ActuatorSection::default(),
            observer: ObserverConfig::default(),
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            eval: EvalSection::default(),
            io: IoSection::default(),
        }
    }
}

impl WorkbenchConfig {
    pub fn from_toml(text: &str) -> Result<WorkbenchConfig, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: WorkbenchConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let message = e.inner().message().to_string();
            ConfigError::Parse { key, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<WorkbenchConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        WorkbenchConfig::from_toml(&text)
    }

    /// Canonical text: every key, in declaration order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Digest of the canonical text, as embedded in checkpoints.
    pub fn digest(&self) -> String {
        digest(self.to_toml().as_bytes())
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            robot: self.robot.clone(),
            contact: self.contact.clone(),
            gains: self.actuator.gains(),
            scales: self.actuator.scales(),
            env: self.env.clone(),
            observer: self.observer,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = ConfigError::Invalid;
        self.sim_params().validate().map_err(inv)?;
        self.ppo.validate().map_err(|e| inv(format!("ppo: {e}")))?;
        if (self.observer.sample_period_s - self.env.control_period_s).abs() > 1e-12 {
            return Err(inv(format!(
                "observer.sample_period_s ({}) must equal env.control_period_s ({}); the observer runs at the control rate",
                self.observer.sample_period_s, self.env.control_period_s
            )));
        }
        if self.io.checkpoint_every == 0 {
            return Err(inv("io.checkpoint_every must be >= 1".into()));
        }
        let e = &self.eval;
        if e.seeds.is_empty() {
            return Err(inv("eval.seeds must not be empty".into()));
        }
        if e.payloads_kg.windows(2).any(|w| w[1] < w[0]) || e.payloads_kg.iter().any(|p| !(*p >= 0.0)) {
            return Err(inv("eval.payloads_kg must be ascending and >= 0".into()));
        }
        if e.kp_sweep_n_m_per_rad.iter().any(|k| !(*k >= 0.0)) {
            return Err(inv("eval.kp_sweep_n_m_per_rad entries must be >= 0".into()));
        }
        if !(e.square_wave_interval_s > 0.0 && e.diagnostics_duration_s > 0.0 && e.impact_onset_s >= 0.0) {
            return Err(inv("eval durations must be positive".into()));
        }
        for s in self.builtin_scenarios().iter().chain(&e.scenarios) {
            s.validate().map_err(|err| inv(err.to_string()))?;
        }
        let mut names: Vec<&str> = e.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(inv("eval.scenarios names must be unique".into()));
        }
        Ok(())
    }

    /// Named scenarios derived from the eval section.
    pub fn builtin_scenarios(&self) -> Vec<Scenario> {
        let e = &self.eval;
        let s = |name: &str, kind| Scenario::new(name, kind, e.command_m_per_s, e.seeds.clone());
        let mut out = vec![
            s("nominal", ScenarioKind::Nominal),
            s("pull", ScenarioKind::ConstantPull { force_x_n: -e.pull_force_n, force_z_n: 0.0 }),
            s("push", ScenarioKind::ConstantPull { force_x_n: e.push_force_n, force_z_n: 0.0 }),
            Scenario {
                duration_s: Some(e.diagnostics_duration_s),
                ..s(
                    "square-wave",
                    ScenarioKind::SquareWave { amplitude_n: e.square_wave_amplitude_n, interval_s: e.square_wave_interval_s },
                )
            },
        ];
        for &imp in &e.impulses_n_s {
            out.push(s(&format!("impact-{imp}"), ScenarioKind::Impact { impulse_x_n_s: imp, onset_s: e.impact_onset_s }));
        }
        out
    }

    /// Look a scenario up by name among the built-in and configured ones.
    pub fn scenario(&self, name: &str) -> Option<Scenario> {
        self.eval.scenarios.iter().find(|s| s.name == name).cloned().or_else(|| self.builtin_scenarios().into_iter().find(|s| s.name == name))
    }

    /// Sections that define the simulated system, which must match between
    /// training and evaluation.
    pub fn physics_digest(&self) -> String {
        #[derive(Serialize)]
        struct Physics<'a> {
            robot: &'a RobotModel,
            contact: &'a ContactParams,
            actuator: &'a ActuatorSection,
            observer: &'a ObserverConfig,
            env: &'a EnvConfig,
        }
        let p = Physics { robot: &self.robot, contact: &self.contact, actuator: &self.actuator, observer: &self.observer, env: &self.env };
        digest(toml::to_string(&p).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = WorkbenchConfig::default();
        c.validate().unwrap();
        let text = c.to_toml();
        let back = WorkbenchConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = WorkbenchConfig::from_toml("[env.rewards]\nvelocity_trackin = 1.0\n").unwrap_err();
        match err {
            ConfigError::Parse { key, .. } => assert_eq!(key, "env.rewards.velocity_trackin"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = WorkbenchConfig::from_toml("seed = 7\n[ppo]\niterations = 50\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.ppo.iterations, 50);
        assert_eq!(c.ppo.horizon, PpoConfig::default().horizon);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in ["[ppo]\ndiscount = 1.0\n", "[observer]\ncutoff_rad_per_s = -1.0\n", "[env]\ndisturbance_probability = 1.5\n", "[eval]\npayloads_kg = [5.0, 2.5]\n"] {
            assert!(matches!(WorkbenchConfig::from_toml(text), Err(ConfigError::Invalid(_))), "{text}");
        }
    }

    #[test]
    fn scenarios_parse_from_toml() {
        let c = WorkbenchConfig::from_toml(
            "[[eval.scenarios]]\nname = \"heavy\"\ncommand_m_per_s = 0.5\nseeds = [1, 2]\n[eval.scenarios.kind]\ntype = \"payload\"\npayload_kg = 8.0\n",
        )
        .unwrap();
        let s = c.scenario("heavy").unwrap();
        assert_eq!(s.kind, ScenarioKind::Payload { payload_kg: 8.0 });
        assert!(c.scenario("nominal").is_some());
        assert!(c.scenario("impact-10").is_some());
    }
}
