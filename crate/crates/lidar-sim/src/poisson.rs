//! Poisson sampling for the photon counting observation model.
//!
//! Small means use sequential CDF inversion (one uniform per draw); large
//! means use Hormann's transformed rejection with squeeze (PTRS), which has
//! bounded expected cost for arbitrarily large means.

use std::sync::OnceLock;

use rayon::prelude::*;
use transient_core::error::{invalid, Result};
use transient_core::rng::{stream_seed, SplitMix64};
use transient_core::{LidarNoiseParams, TransientImage, TransientKind};

/// Means above this are rejected as configuration errors rather than sampled.
pub const MAX_POISSON_MEAN: f64 = 1e12;

const PTRS_THRESHOLD: f64 = 10.0;
const LN_FACT_TABLE: usize = 1024;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0f64; LN_FACT_TABLE];
        let mut acc = 0.0f64;
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            t[k] = acc;
        }
        t
    })
}

/// Natural log of k! via a cumulative table for small k and a Stirling
/// series beyond it.
pub fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < LN_FACT_TABLE {
        return ln_fact_table()[k as usize];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Draws one Poisson(mean) sample. Mean zero returns zero without consuming
/// randomness; means above [`MAX_POISSON_MEAN`] are an error.
pub fn sample_poisson(mean: f64, rng: &mut SplitMix64) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid(format!("Poisson mean must be finite and nonnegative, got {mean}")));
    }
    if mean > MAX_POISSON_MEAN {
        return Err(invalid(format!("Poisson mean {mean:.3e} exceeds supported range {MAX_POISSON_MEAN:.0e}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < PTRS_THRESHOLD {
        Ok(poisson_inversion(mean, rng))
    } else {
        Ok(poisson_ptrs(mean, rng))
    }
}

fn poisson_inversion(mean: f64, rng: &mut SplitMix64) -> u64 {
    let u = rng.next_f64();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    // Far beyond any mass reachable for mean < 10; guards against a stalled
    // cdf when u lands in the last few ulps below 1.
    let cap = (mean + 20.0 * mean.sqrt() + 100.0) as u64;
    while u > cdf && k < cap {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

fn poisson_ptrs(mean: f64, rng: &mut SplitMix64) -> u64 {
    let ln_mean = mean.ln();
    let b = 0.931 + 2.53 * mean.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.next_f64() - 0.5;
        let v = rng.next_f64();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= k * ln_mean - mean - ln_factorial(k as u64)
        {
            return k as u64;
        }
    }
}

/// Applies the observation model to a rate image: counts are drawn per bin
/// and per channel from Poisson(N eta rate + B) using an independent RNG
/// substream per pixel, so the result does not depend on thread scheduling.
pub fn sample_counts(
    rate: &TransientImage,
    noise: &LidarNoiseParams,
    seed: u64,
) -> Result<TransientImage> {
    if rate.kind() != TransientKind::Rate {
        return Err(invalid("sample_counts expects a rate image"));
    }
    noise.validate()?;
    let scale = noise.signal_scale();
    let background = noise.background_per_bin();
    let stride = rate.n_bins() * rate.channels();
    let mut data = vec![0.0f32; rate.data().len()];
    let results: Vec<Result<()>> = data
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(pixel, out)| {
            let mut rng = SplitMix64::new(stream_seed(seed, &[pixel as u64]));
            let src = &rate.data()[pixel * stride..(pixel + 1) * stride];
            for (dst, &r) in out.iter_mut().zip(src) {
                let mean = scale * r as f64 + background;
                *dst = sample_poisson(mean, &mut rng)? as f32;
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    TransientImage::from_data(
        rate.height(),
        rate.width(),
        rate.n_bins(),
        rate.channels(),
        TransientKind::NoisyCounts,
        data,
    )
}
