//! Pixel footprint sampling for a Gaussian beam profile.
//!
//! The sensor footprint is modeled as an isotropic 2D Gaussian truncated at
//! 4 sigma. Sample offsets come from a seeded low-discrepancy point set so a
//! given (seed, pixel) pair always reproduces the same rays, and points are
//! emitted in mirrored pairs so opposite offsets carry identical weights.

use crate::error::{invalid, Result};
use crate::rng::SplitMix64;

/// One footprint sample: an absolute pixel coordinate and its quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintSample {
    pub pixel: [f64; 2],
    pub weight: f64,
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / base as f64;
    while index > 0 {
        f *= inv;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Samples the footprint around `pixel` with `n_samples` weighted offsets.
///
/// Weights are proportional to the Gaussian density at each offset and
/// normalized to sum to 1. `sigma_px = 0` returns the pixel center with unit
/// weight regardless of `n_samples`. The same seed always produces the same
/// point set, so training iterations see a fixed quadrature rule per pixel.
pub fn footprint_samples(
    pixel: [f64; 2],
    sigma_px: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<FootprintSample>> {
    if n_samples == 0 {
        return Err(invalid("footprint needs at least one sample"));
    }
    if !(sigma_px.is_finite() && sigma_px >= 0.0) {
        return Err(invalid(format!("footprint sigma must be >= 0, got {sigma_px}")));
    }
    if sigma_px == 0.0 || n_samples == 1 {
        return Ok(vec![FootprintSample { pixel, weight: 1.0 }]);
    }

    let mut rng = SplitMix64::new(seed);
    let shift_u = rng.next_f64();
    let shift_v = rng.next_f64();
    let radius = 4.0 * sigma_px;

    let mut offsets: Vec<[f64; 2]> = Vec::with_capacity(n_samples);
    if n_samples % 2 == 1 {
        offsets.push([0.0, 0.0]);
    }
    let pairs = n_samples / 2;
    for i in 0..pairs {
        // Area-uniform placement in the truncation disk, scrambled by the seed.
        let u = (halton(i as u64 + 1, 2) + shift_u).fract();
        let v = (halton(i as u64 + 1, 3) + shift_v).fract();
        let r = radius * u.sqrt();
        let theta = 2.0 * std::f64::consts::PI * v;
        let (dy, dx) = (r * theta.sin(), r * theta.cos());
        offsets.push([dx, dy]);
        offsets.push([-dx, -dy]);
    }

    let inv_two_sigma_sq = 1.0 / (2.0 * sigma_px * sigma_px);
    let mut weights: Vec<f64> = offsets
        .iter()
        .map(|o| (-(o[0] * o[0] + o[1] * o[1]) * inv_two_sigma_sq).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    Ok(offsets
        .iter()
        .zip(weights)
        .map(|(o, weight)| FootprintSample { pixel: [pixel[0] + o[0], pixel[1] + o[1]], weight })
        .collect())
}
