//! Renderer configuration and its validity rules.

use transient_core::error::{invalid, Result};
use transient_core::{Aabb, ImpulseResponse, TimeAxis, SPEED_OF_LIGHT};

/// Fraction of the scene diagonal used as the default near-field clamp.
pub const DEFAULT_MIN_DISTANCE_FRACTION: f64 = 0.01;

/// Largest allowed ratio of step size to the distance light travels in one
/// time bin. Coarser marches alias the histogram.
pub const MAX_STEP_PER_BIN_DISTANCE: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub time_axis: TimeAxis,
    pub impulse: ImpulseResponse,
    /// Ray segment considered for marching, as distances from the camera.
    pub t_near: f64,
    pub t_far: f64,
    /// Distance between volume samples along a ray. Must not exceed a
    /// quarter of the distance light covers per bin (`bin_width * c / 4`).
    pub step_size: f64,
    /// Denominator clamp for the inverse-square factor.
    pub min_distance: f64,
    pub footprint_sigma: f64,
    pub footprint_samples: usize,
    pub seed: u64,
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_near >= 0.0 && self.t_near.is_finite()) {
            return Err(invalid(format!("t_near must be >= 0, got {}", self.t_near)));
        }
        if !(self.t_far > self.t_near && self.t_far.is_finite()) {
            return Err(invalid(format!(
                "t_far must exceed t_near, got [{}, {}]",
                self.t_near, self.t_far
            )));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid(format!("step_size must be positive, got {}", self.step_size)));
        }
        let max_step = MAX_STEP_PER_BIN_DISTANCE * self.time_axis.bin_width() * SPEED_OF_LIGHT;
        if self.step_size > max_step {
            return Err(invalid(format!(
                "step_size {} exceeds {} (a quarter of the per-bin light travel distance)",
                self.step_size, max_step
            )));
        }
        if !(self.min_distance > 0.0 && self.min_distance.is_finite()) {
            return Err(invalid(format!("min_distance must be positive, got {}", self.min_distance)));
        }
        if !(self.footprint_sigma >= 0.0 && self.footprint_sigma.is_finite()) {
            return Err(invalid(format!(
                "footprint_sigma must be >= 0, got {}",
                self.footprint_sigma
            )));
        }
        if self.footprint_samples == 0 {
            return Err(invalid("need at least one footprint sample"));
        }
        Ok(())
    }

    /// Largest valid step for a time axis.
    pub fn max_step(axis: &TimeAxis) -> f64 {
        MAX_STEP_PER_BIN_DISTANCE * axis.bin_width() * SPEED_OF_LIGHT
    }

    /// Default near-field clamp: one percent of the bounds diagonal.
    pub fn default_min_distance(bbox: &Aabb) -> f64 {
        DEFAULT_MIN_DISTANCE_FRACTION * bbox.diagonal()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use transient_core::Vec3;

    fn base() -> RenderConfig {
        let axis = TimeAxis::new(64, 1e-10, 0.0).unwrap();
        let step = RenderConfig::max_step(&axis);
        RenderConfig {
            time_axis: axis,
            impulse: ImpulseResponse::delta(),
            t_near: 0.0,
            t_far: 10.0,
            step_size: step,
            min_distance: 0.01,
            footprint_sigma: 0.0,
            footprint_samples: 1,
            seed: 0,
        }
    }

    #[test]
    fn accepts_sane_config() {
        base().validate().unwrap();
    }

    #[test]
    fn rejects_oversized_step() {
        let mut cfg = base();
        cfg.step_size *= 1.01;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut cfg = base();
        cfg.t_far = cfg.t_near;
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.t_near = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.min_distance = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.footprint_samples = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_min_distance_tracks_diagonal() {
        let bbox = Aabb { min: Vec3::ZERO, max: Vec3::new(3.0, 0.0, 4.0) };
        assert!((RenderConfig::default_min_distance(&bbox) - 0.05).abs() < 1e-12);
    }
}
