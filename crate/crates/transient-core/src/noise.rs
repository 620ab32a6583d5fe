//! Observation model parameters for a single-photon detector.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Acquisition parameters of the pulsed illumination / detection chain.
///
/// Measured counts in a bin follow Poisson(N * eta * rate + B), where the
/// background B = N * (eta * ambient_rate + dark_rate) applies per bin and
/// per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarNoiseParams {
    /// Number of emitted pulses N per histogram acquisition.
    pub n_pulses: u64,
    /// Detection efficiency eta in (0, 1].
    pub efficiency: f64,
    /// Ambient photons per pulse per bin reaching the detector.
    pub ambient_rate: f64,
    /// Dark counts per pulse per bin.
    pub dark_rate: f64,
}

impl LidarNoiseParams {
    pub fn new(n_pulses: u64, efficiency: f64, ambient_rate: f64, dark_rate: f64) -> Result<Self> {
        let params = LidarNoiseParams { n_pulses, efficiency, ambient_rate, dark_rate };
        params.validate()?;
        Ok(params)
    }

    /// Noiseless detector: background-free, unit efficiency.
    pub fn noiseless(n_pulses: u64) -> Result<Self> {
        Self::new(n_pulses, 1.0, 0.0, 0.0)
    }

    /// Builds params that realize a given expected background per bin by
    /// folding everything into the dark rate.
    pub fn from_background(n_pulses: u64, efficiency: f64, background_per_bin: f64) -> Result<Self> {
        if !(background_per_bin.is_finite() && background_per_bin >= 0.0) {
            return Err(invalid(format!("background must be >= 0, got {background_per_bin}")));
        }
        Self::new(n_pulses, efficiency, 0.0, background_per_bin / n_pulses.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(invalid("need at least one pulse"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid(format!("efficiency must be in (0, 1], got {}", self.efficiency)));
        }
        if !(self.ambient_rate.is_finite() && self.ambient_rate >= 0.0) {
            return Err(invalid(format!("ambient rate must be >= 0, got {}", self.ambient_rate)));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(invalid(format!("dark rate must be >= 0, got {}", self.dark_rate)));
        }
        Ok(())
    }

    /// Expected background counts per bin per channel: N (eta A + D).
    pub fn background_per_bin(&self) -> f64 {
        self.n_pulses as f64 * (self.efficiency * self.ambient_rate + self.dark_rate)
    }

    /// Factor converting per-pulse arrival rate to expected counts: N eta.
    pub fn signal_scale(&self) -> f64 {
        self.n_pulses as f64 * self.efficiency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_formula() {
        let p = LidarNoiseParams::new(1000, 0.5, 0.002, 0.0005).unwrap();
        assert!((p.background_per_bin() - 1000.0 * (0.5 * 0.002 + 0.0005)).abs() < 1e-12);
        assert!((p.signal_scale() - 500.0).abs() < 1e-12);
    }

    #[test]
    fn from_background_round_trips() {
        let p = LidarNoiseParams::from_background(1_000_000, 0.25, 0.001).unwrap();
        assert!((p.background_per_bin() - 0.001).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(LidarNoiseParams::new(0, 0.5, 0.0, 0.0).is_err());
        assert!(LidarNoiseParams::new(10, 0.0, 0.0, 0.0).is_err());
        assert!(LidarNoiseParams::new(10, 1.5, 0.0, 0.0).is_err());
        assert!(LidarNoiseParams::new(10, 0.5, -1.0, 0.0).is_err());
        assert!(LidarNoiseParams::new(10, 0.5, 0.0, f64::NAN).is_err());
    }
}
