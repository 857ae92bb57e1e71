use rand::Rng;

use crate::dynamics::Vec2;

use super::EnvConfig;

/// A constant force on the trunk center of mass over `[start, start + duration)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisturbanceSpec {
    pub force: Vec2,
    pub start_s: f64,
    pub duration_s: f64,
    pub active: bool,
}

impl DisturbanceSpec {
    pub fn inactive() -> DisturbanceSpec {
        DisturbanceSpec { force: Vec2::zeros(), start_s: 0.0, duration_s: 0.0, active: false }
    }

    pub fn window(&self) -> Option<ForceWindow> {
        self.active.then_some(ForceWindow { start_s: self.start_s, end_s: self.start_s + self.duration_s, force: self.force })
    }
}

/// Force applied over the half-open interval `[start_s, end_s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub force: Vec2,
}

impl ForceWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }
}

/// Total force of all windows containing `t`.
pub fn force_at(windows: &[ForceWindow], t: f64) -> Vec2 {
    windows.iter().filter(|w| w.contains(t)).map(|w| w.force).sum()
}

/// Draws an episode's disturbance. The same number of random values is
/// consumed whether or not the disturbance ends up active.
pub fn sample_disturbance(rng: &mut impl Rng, cfg: &EnvConfig, probability: f64) -> DisturbanceSpec {
    let u: f64 = rng.gen();
    let fx = rng.gen_range(cfg.disturbance_fx_range_n[0]..=cfg.disturbance_fx_range_n[1]);
    let fz = rng.gen_range(cfg.disturbance_fz_range_n[0]..=cfg.disturbance_fz_range_n[1]);
    let duration = rng.gen_range(cfg.disturbance_duration_range_s[0]..=cfg.disturbance_duration_range_s[1]);
    let latest_start = (cfg.episode_length_s - duration).max(0.0);
    let start = rng.gen_range(0.0..=latest_start);
    if u < probability {
        DisturbanceSpec { force: Vec2::new(fx, fz), start_s: start, duration_s: duration, active: true }
    } else {
        DisturbanceSpec::inactive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_in_box_and_mean_duration() {
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mut active, mut dur) = (0usize, 0.0);
        for _ in 0..100_000 {
            let d = sample_disturbance(&mut rng, &cfg, 0.6);
            if d.active {
                active += 1;
                dur += d.duration_s;
                assert!((-100.0..=100.0).contains(&d.force.x));
                assert!((-200.0..=0.0).contains(&d.force.y));
                assert!((1.0..=4.0).contains(&d.duration_s));
                assert!(d.start_s + d.duration_s <= cfg.episode_length_s + 1e-12);
            } else {
                assert_eq!(d.force, Vec2::zeros());
                assert!(d.window().is_none());
            }
        }
        let frac = active as f64 / 100_000.0;
        assert!((frac - 0.6).abs() < 0.01, "{frac}");
        assert!((dur / active as f64 - 2.5).abs() < 0.05);
    }

    #[test]
    fn window_is_half_open() {
        let w = ForceWindow { start_s: 1.0, end_s: 2.0, force: Vec2::new(3.0, 0.0) };
        assert_eq!(force_at(&[w], 0.999), Vec2::zeros());
        assert_eq!(force_at(&[w], 1.0), Vec2::new(3.0, 0.0));
        assert_eq!(force_at(&[w], 2.0), Vec2::zeros());
    }
}
