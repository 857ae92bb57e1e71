//! Generalized-momentum disturbance observer with a first-order discrete
//! low-pass filter.
//!
//! ```text
//! τ̂_d = βp − (1−γ)/(1−γz⁻¹) · (βp + Sᵀτ + Cᵀq̇ − G)
//! p = M q̇,  γ = e^(−λΔt),  β = (1−γ)γ⁻¹/Δt
//! ```

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsTerms, GenVec, JointVec, JOINT_OFFSET, NA};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverConfig {
    pub cutoff_rad_per_s: f64,
    pub sample_period_s: f64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self { cutoff_rad_per_s: 100.0, sample_period_s: 0.01 }
    }
}

impl ObserverConfig {
    pub fn gamma(&self) -> f64 {
        (-self.cutoff_rad_per_s * self.sample_period_s).exp()
    }

    pub fn beta(&self) -> f64 {
        let g = self.gamma();
        (1.0 - g) / g / self.sample_period_s
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.cutoff_rad_per_s > 0.0 && self.cutoff_rad_per_s.is_finite()) {
            return Err("cutoff_rad_per_s must be > 0".into());
        }
        if !(self.sample_period_s > 0.0 && self.sample_period_s.is_finite()) {
            return Err("sample_period_s must be > 0".into());
        }
        Ok(())
    }
}

/// Filter memory `y` (the low-passed bracket term).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObserverState {
    pub y: GenVec,
    pub initialized: bool,
}

impl ObserverState {
    pub fn reset(&mut self) {
        *self = ObserverState::default();
    }
}

/// Filter input `u = βp + Sᵀτ + Cᵀq̇ − G` and momentum term `βp`.
pub fn filter_input(cfg: &ObserverConfig, terms: &DynamicsTerms, tau: &JointVec, qd: &GenVec) -> (GenVec, GenVec) {
    let beta_p = terms.mass * qd * cfg.beta();
    let mut u = beta_p + terms.coriolis.transpose() * qd - terms.gravity;
    for j in 0..NA {
        u[JOINT_OFFSET + j] += tau[j];
    }
    (u, beta_p)
}

/// One observer update. The first call initializes the memory to `βp` so the
/// first estimate is exactly zero.
pub fn gm_observer_step(
    cfg: &ObserverConfig,
    state: &mut ObserverState,
    terms: &DynamicsTerms,
    tau: &JointVec,
    qd: &GenVec,
) -> GenVec {
    let (u, beta_p) = filter_input(cfg, terms, tau, qd);
    step_with_input(cfg, state, &u, &beta_p)
}

/// Recursion on precomputed inputs: `y ← γy + (1−γ)u`, `τ̂_d = βp − y`.
pub fn step_with_input(cfg: &ObserverConfig, state: &mut ObserverState, u: &GenVec, beta_p: &GenVec) -> GenVec {
    if state.initialized {
        let g = cfg.gamma();
        state.y = state.y * g + u * (1.0 - g);
    } else {
        state.y = *beta_p;
        state.initialized = true;
    }
    beta_p - state.y
}
