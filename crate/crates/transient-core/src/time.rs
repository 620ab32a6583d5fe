//! Discrete time axis for photon arrival histograms.
//!
//! Arrival times map to a continuous bin coordinate `(t - t_offset) / bin_width`.
//! Integer coordinate n is the representative time of bin n, so a return that
//! lands exactly on coordinate n deposits all of its mass in bin n and maps
//! back to the same time. Fractional coordinates are distributed over the two
//! neighboring bins by linear splatting.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light in meters per second, exact by definition.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform histogram binning of round-trip arrival times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    n_bins: usize,
    /// Bin width in seconds.
    bin_width: f64,
    /// Time of bin coordinate zero, in seconds.
    t_offset: f64,
    /// Propagation speed used for time/distance conversions (m/s).
    speed_of_light: f64,
}

impl TimeAxis {
    pub fn new(n_bins: usize, bin_width: f64, t_offset: f64) -> Result<Self> {
        if n_bins == 0 {
            return Err(invalid("time axis needs at least one bin"));
        }
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(invalid(format!("bin width must be positive, got {bin_width}")));
        }
        if !(t_offset.is_finite() && t_offset >= 0.0) {
            return Err(invalid(format!("time offset must be >= 0, got {t_offset}")));
        }
        Ok(TimeAxis { n_bins, bin_width, t_offset, speed_of_light: SPEED_OF_LIGHT })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn t_offset(&self) -> f64 {
        self.t_offset
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    /// Total time span covered by the histogram, in seconds.
    pub fn duration(&self) -> f64 {
        self.n_bins as f64 * self.bin_width
    }

    /// Continuous bin coordinate of an arrival time.
    pub fn fractional_bin(&self, t: f64) -> f64 {
        (t - self.t_offset) / self.bin_width
    }

    /// Inverse of [`fractional_bin`](Self::fractional_bin).
    pub fn time_at_bin(&self, bin: f64) -> f64 {
        self.t_offset + bin * self.bin_width
    }

    /// Bin coordinate of the round trip to a point at one-way distance `d` meters.
    pub fn bin_of_one_way_distance(&self, d: f64) -> f64 {
        self.fractional_bin(2.0 * d / self.speed_of_light)
    }

    /// One-way distance in meters whose round trip maps to bin coordinate `bin`.
    pub fn one_way_distance_at_bin(&self, bin: f64) -> f64 {
        self.time_at_bin(bin) * self.speed_of_light * 0.5
    }

    /// Distance a one-way wavefront travels per bin, in meters.
    pub fn one_way_distance_per_bin(&self) -> f64 {
        self.bin_width * self.speed_of_light * 0.5
    }
}

/// Linear splat of a continuous bin coordinate onto the two nearest bins.
///
/// Returns `(lo, w_lo, w_hi)`: fraction `w_lo` of the mass belongs to bin `lo`
/// and `w_hi` to bin `lo + 1`. The weights always sum to exactly 1.0 and the
/// returned index may be negative or past the end of the axis; callers decide
/// how to treat out-of-range bins.
pub fn splat_weights(bin: f64) -> (i64, f64, f64) {
    let lo = bin.floor();
    let frac = bin - lo;
    (lo as i64, 1.0 - frac, frac)
}
