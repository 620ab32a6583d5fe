//! Background level estimation from raw count histograms.

use transient_core::error::{invalid, Result};
use transient_core::TransientImage;

/// Safety factor applied to the estimated quiet-prefix mean.
pub const BACKGROUND_SAFETY_FACTOR: f64 = 3.0;

/// Estimates the per-bin background level from the quiet prefix of the
/// histograms: bins earlier than the first return anywhere in the views.
///
/// The per-bin mean over all pixels and channels is scanned for the first
/// bin exceeding a quarter of the peak mean; bins before it form the quiet
/// prefix. The estimate is the prefix mean times a safety factor of
/// [`BACKGROUND_SAFETY_FACTOR`]. Fails when no quiet prefix exists (a
/// return in the very first bin).
pub fn estimate_background(views: &[&TransientImage]) -> Result<f64> {
    let first = views.first().ok_or_else(|| invalid("no views to estimate background from"))?;
    let n_bins = first.n_bins();
    let channels = first.channels();
    let mut per_bin = vec![0.0f64; n_bins];
    let mut weight = 0.0f64;
    for view in views {
        if view.n_bins() != n_bins || view.channels() != channels {
            return Err(invalid("views disagree on histogram shape"));
        }
        let pixels = (view.height() * view.width()) as f64;
        for pixel in view.data().chunks(n_bins * channels) {
            for (n, bin) in pixel.chunks(channels).enumerate() {
                for &v in bin {
                    per_bin[n] += v as f64;
                }
            }
        }
        weight += pixels * channels as f64;
    }
    for v in per_bin.iter_mut() {
        *v /= weight;
    }

    let peak = per_bin.iter().cloned().fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(invalid("histograms are empty; cannot estimate background"));
    }
    let first_signal = per_bin
        .iter()
        .position(|&v| v > 0.25 * peak)
        .expect("peak exists, so some bin exceeds a quarter of it");
    if first_signal == 0 {
        return Err(invalid(
            "no quiet prefix before the first return; background cannot be estimated",
        ));
    }
    let prefix_mean: f64 = per_bin[..first_signal].iter().sum::<f64>() / first_signal as f64;
    Ok(BACKGROUND_SAFETY_FACTOR * prefix_mean)
}
