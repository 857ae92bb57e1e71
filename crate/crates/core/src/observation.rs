//! Observation layouts and the fixed input scaling shared by every network.

/// Proprioceptive frame length.
pub const OBS_DIM: usize = 24;
/// Frames kept in the history buffer.
pub const HISTORY_LEN: usize = 5;
pub const HISTORY_DIM: usize = OBS_DIM * HISTORY_LEN;
/// Privileged critic extras: base velocity, contact flags, foot clearance, true external force.
pub const PRIVILEGED_DIM: usize = 8;
/// Hybrid action: four target positions and four feedforward torques.
pub const HYBRID_ACTION_DIM: usize = 8;
pub const POSITION_ACTION_DIM: usize = 4;
pub const COMPENSATION_DIM: usize = 4;
/// Compensation policy input: frame, estimated external force, hybrid action.
pub const DAAC_OBS_DIM: usize = OBS_DIM + 2 + HYBRID_ACTION_DIM;

pub mod slot {
    pub const PITCH_RATE: usize = 0;
    pub const GRAVITY: usize = 1;
    pub const COMMAND: usize = 3;
    pub const JOINT_POS: usize = 4;
    pub const JOINT_VEL: usize = 8;
    pub const TORQUE: usize = 12;
    pub const PREV_ACTION: usize = 16;
}

/// Per-entry multipliers applied before any network sees a frame.
pub fn obs_scales() -> [f32; OBS_DIM] {
    let mut s = [1.0f32; OBS_DIM];
    s[slot::PITCH_RATE] = 0.25;
    s[slot::COMMAND] = 2.0;
    for i in 0..4 {
        s[slot::JOINT_VEL + i] = 0.05;
        s[slot::TORQUE + i] = 0.05;
    }
    s
}

pub fn privileged_scales() -> [f32; PRIVILEGED_DIM] {
    [2.0, 2.0, 1.0, 1.0, 10.0, 10.0, 0.01, 0.01]
}

/// Scale used for estimated external forces in the compensation policy input.
pub const FORCE_SCALE: f32 = 0.01;

pub fn scale_obs(frame: &[f64; OBS_DIM]) -> [f32; OBS_DIM] {
    let s = obs_scales();
    std::array::from_fn(|i| frame[i] as f32 * s[i])
}

pub fn scale_privileged(p: &[f64; PRIVILEGED_DIM]) -> [f32; PRIVILEGED_DIM] {
    let s = privileged_scales();
    std::array::from_fn(|i| p[i] as f32 * s[i])
}

/// Fixed-length history of proprioceptive frames, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    frames: [[f64; OBS_DIM]; HISTORY_LEN],
}

impl History {
    /// Every slot holds `frame`.
    pub fn filled(frame: &[f64; OBS_DIM]) -> History {
        History { frames: [*frame; HISTORY_LEN] }
    }

    /// Drop the oldest frame and append `frame`.
    pub fn push(&mut self, frame: &[f64; OBS_DIM]) {
        self.frames.rotate_left(1);
        self.frames[HISTORY_LEN - 1] = *frame;
    }

    pub fn latest(&self) -> &[f64; OBS_DIM] {
        &self.frames[HISTORY_LEN - 1]
    }

    pub fn frames(&self) -> &[[f64; OBS_DIM]; HISTORY_LEN] {
        &self.frames
    }

    pub fn flat(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }

    pub fn scaled(&self) -> Vec<f32> {
        self.frames.iter().flat_map(scale_obs).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_shifts_one_frame() {
        let a = [1.0; OBS_DIM];
        let b = [2.0; OBS_DIM];
        let mut h = History::filled(&a);
        assert!(h.frames().iter().all(|f| f == &a));
        h.push(&b);
        assert_eq!(h.frames()[HISTORY_LEN - 1], b);
        assert_eq!(h.frames()[HISTORY_LEN - 2], a);
        assert_eq!(h.flat().len(), HISTORY_DIM);
        for _ in 0..HISTORY_LEN {
            h.push(&b);
        }
        assert!(h.frames().iter().all(|f| f == &b));
    }

    #[test]
    fn dims() {
        assert_eq!(HISTORY_DIM, 120);
        assert_eq!(DAAC_OBS_DIM, 34);
        assert_eq!(OBS_DIM + PRIVILEGED_DIM, 32);
        assert_eq!(DAAC_OBS_DIM + PRIVILEGED_DIM, 42);
    }
}
