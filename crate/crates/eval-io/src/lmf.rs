//! Log-matched-filter depth estimation from photon-count histograms.

use rayon::prelude::*;
use transient_core::{ImpulseResponse, TimeAxis, TransientImage};
use transient_renderer::DEPTH_INVALID;

/// Floor inside the kernel logarithm so zero taps stay usable.
pub const LMF_EPSILON: f64 = 1e-12;

/// Log-likelihood score of placing the pulse peak at each bin:
/// `scores[n] = sum_m ln(f[m] + eps) * h[n + m - zero_index]`, where the
/// kernel is zero-padded over the whole axis, so counts the candidate pulse
/// cannot explain are charged `ln(eps)` each. Computed as a short
/// correlation plus the constant `ln(eps) * sum(h)`.
pub fn lmf_scores(histogram: &[f64], impulse: &ImpulseResponse) -> Vec<f64> {
    let kernel = impulse.kernel();
    let zero = impulse.zero_index() as i64;
    let log_eps = LMF_EPSILON.ln();
    let lifted: Vec<f64> =
        kernel.iter().map(|&f| (f + LMF_EPSILON).ln() - log_eps).collect();
    let base = log_eps * histogram.iter().sum::<f64>();
    let n_bins = histogram.len() as i64;
    let mut scores = vec![0.0f64; histogram.len()];
    for (n, score) in scores.iter_mut().enumerate() {
        let mut acc = base;
        for (m, &lk) in lifted.iter().enumerate() {
            let idx = n as i64 + m as i64 - zero;
            if idx >= 0 && idx < n_bins {
                acc += lk * histogram[idx as usize];
            }
        }
        *score = acc;
    }
    scores
}

/// Maximum-score depth in meters (one-way). Ties resolve to the smallest
/// bin; an all-zero histogram yields [`DEPTH_INVALID`].
pub fn lmf_depth(histogram: &[f64], impulse: &ImpulseResponse, axis: &TimeAxis) -> f64 {
    if histogram.iter().all(|&h| h == 0.0) {
        return DEPTH_INVALID as f64;
    }
    let scores = lmf_scores(histogram, impulse);
    let mut best_bin = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (n, &s) in scores.iter().enumerate() {
        if s > best {
            best = s;
            best_bin = n;
        }
    }
    axis.one_way_distance_at_bin(best_bin as f64)
}

/// Per-pixel matched-filter depth over a transient image, with channels
/// summed into a single histogram per pixel.
pub fn lmf_depth_map(img: &TransientImage, impulse: &ImpulseResponse, axis: &TimeAxis) -> Vec<f32> {
    let (height, width) = (img.height(), img.width());
    let (n_bins, channels) = (img.n_bins(), img.channels());
    (0..height * width)
        .into_par_iter()
        .map(|p| {
            let px = img.pixel(p / width, p % width);
            let mut hist = vec![0.0f64; n_bins];
            for (bin, h) in hist.iter_mut().enumerate() {
                for c in 0..channels {
                    *h += f64::from(px[bin * channels + c]);
                }
            }
            lmf_depth(&hist, impulse, axis) as f32
        })
        .collect()
}
