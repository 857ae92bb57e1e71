use serde::{Deserialize, Serialize};

/// Episode timing, command and randomization ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub control_period_s: f64,
    pub physics_substeps: usize,
    pub episode_length_s: f64,
    pub command_range_m_per_s: [f64; 2],
    pub zero_command_probability: f64,
    pub disturbance_probability: f64,
    pub disturbance_fx_range_n: [f64; 2],
    pub disturbance_fz_range_n: [f64; 2],
    pub disturbance_duration_range_s: [f64; 2],
    /// Fraction of stage-2 episodes carrying a payload.
    pub payload_probability: f64,
    pub payload_range_kg: [f64; 2],
    pub joint_reset_noise_rad: f64,
    pub fall_pitch_rad: f64,
    pub fall_height_m: f64,
    pub blowup_threshold: f64,
    /// Raw policy outputs are clipped to `±raw_action_clip` before scaling.
    pub raw_action_clip: f64,
    pub rewards: RewardWeights,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            control_period_s: 0.01,
            physics_substeps: 10,
            episode_length_s: 10.0,
            command_range_m_per_s: [0.0, 1.2],
            zero_command_probability: 0.1,
            disturbance_probability: 0.6,
            disturbance_fx_range_n: [-100.0, 100.0],
            disturbance_fz_range_n: [-200.0, 0.0],
            disturbance_duration_range_s: [1.0, 4.0],
            payload_probability: 0.3,
            payload_range_kg: [0.0, 10.0],
            joint_reset_noise_rad: 0.05,
            fall_pitch_rad: 1.0,
            fall_height_m: 0.15,
            blowup_threshold: 1e6,
            raw_action_clip: 4.0,
            rewards: RewardWeights::default(),
        }
    }
}

impl EnvConfig {
    pub fn physics_step_s(&self) -> f64 {
        self.control_period_s / self.physics_substeps as f64
    }

    pub fn episode_steps(&self) -> usize {
        (self.episode_length_s / self.control_period_s).round() as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(format!("{name} must lie in [0, 1], got {p}"))
            }
        };
        let range = |name: &str, r: [f64; 2]| {
            if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
                Ok(())
            } else {
                Err(format!("{name} must be an ordered finite pair, got {r:?}"))
            }
        };
        if !(self.control_period_s > 0.0) {
            return Err("control_period_s must be > 0".into());
        }
        if self.physics_substeps == 0 {
            return Err("physics_substeps must be >= 1".into());
        }
        if !(self.episode_length_s > 0.0) {
            return Err("episode_length_s must be > 0".into());
        }
        prob("zero_command_probability", self.zero_command_probability)?;
        prob("disturbance_probability", self.disturbance_probability)?;
        prob("payload_probability", self.payload_probability)?;
        range("command_range_m_per_s", self.command_range_m_per_s)?;
        range("disturbance_fx_range_n", self.disturbance_fx_range_n)?;
        range("disturbance_fz_range_n", self.disturbance_fz_range_n)?;
        range("disturbance_duration_range_s", self.disturbance_duration_range_s)?;
        range("payload_range_kg", self.payload_range_kg)?;
        if self.disturbance_duration_range_s[0] <= 0.0 || self.disturbance_duration_range_s[1] > self.episode_length_s {
            return Err("disturbance durations must be positive and fit in an episode".into());
        }
        if self.payload_range_kg[0] < 0.0 {
            return Err("payload_range_kg must be nonnegative".into());
        }
        if !(self.joint_reset_noise_rad >= 0.0) {
            return Err("joint_reset_noise_rad must be >= 0".into());
        }
        if !(self.fall_pitch_rad > 0.0) || !self.fall_height_m.is_finite() || !(self.blowup_threshold > 0.0) {
            return Err("termination thresholds must be positive".into());
        }
        if !(self.raw_action_clip > 0.0) {
            return Err("raw_action_clip must be > 0".into());
        }
        Ok(())
    }
}

/// Weights of the reward terms. Penalty weights are negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub velocity_tracking: f64,
    /// Denominator of the tracking kernel `exp(−e²/σ)`, in (m/s)².
    pub velocity_tracking_sigma: f64,
    pub vertical_velocity: f64,
    pub pitch_rate: f64,
    pub orientation: f64,
    pub torque: f64,
    pub action_rate: f64,
    pub base_height: f64,
    pub joint_tracking: f64,
    /// Also charge the joint-tracking term to position-only actions.
    pub joint_tracking_for_position_actions: bool,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            velocity_tracking: 1.0,
            velocity_tracking_sigma: 0.25,
            vertical_velocity: -2.0,
            pitch_rate: -0.05,
            orientation: -5.0,
            torque: -1e-4,
            action_rate: -0.01,
            base_height: -10.0,
            joint_tracking: -0.2,
            joint_tracking_for_position_actions: false,
        }
    }
}
