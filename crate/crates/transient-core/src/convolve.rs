//! Discrete convolution of binned transients with an impulse response.
//!
//! `out[n] = sum_m kernel[m] * signal[n - (m - zero_index)]` with zero padding
//! outside the axis, so a unit delta kernel at `zero_index` is the identity.

use crate::error::{invalid, Result};
use crate::impulse::ImpulseResponse;

fn check_kernel(impulse: &ImpulseResponse, n_bins: usize) -> Result<()> {
    if impulse.len() > 2 * n_bins {
        return Err(invalid(format!(
            "impulse kernel of {} taps is longer than twice the {} histogram bins",
            impulse.len(),
            n_bins
        )));
    }
    Ok(())
}

/// Convolves a single-channel transient, returning a fresh vector.
pub fn convolve_bins(signal: &[f64], impulse: &ImpulseResponse) -> Result<Vec<f64>> {
    let mut out = vec![0.0; signal.len()];
    convolve_channels(signal, signal.len(), 1, impulse, &mut out)?;
    Ok(out)
}

/// Adjoint of [`convolve_bins`]: correlation with the kernel.
pub fn correlate_bins(signal: &[f64], impulse: &ImpulseResponse) -> Result<Vec<f64>> {
    let mut out = vec![0.0; signal.len()];
    correlate_channels(signal, signal.len(), 1, impulse, &mut out)?;
    Ok(out)
}

/// Convolves an interleaved `[bin][channel]` buffer into `out`.
///
/// `signal` and `out` must both hold `n_bins * channels` values and must not
/// alias. Mass that the kernel shifts past either end of the axis is dropped.
pub fn convolve_channels(
    signal: &[f64],
    n_bins: usize,
    channels: usize,
    impulse: &ImpulseResponse,
    out: &mut [f64],
) -> Result<()> {
    check_kernel(impulse, n_bins)?;
    debug_assert_eq!(signal.len(), n_bins * channels);
    debug_assert_eq!(out.len(), n_bins * channels);
    out.fill(0.0);
    let kernel = impulse.kernel();
    let zero = impulse.zero_index() as i64;
    // Scatter from source bins: each source bin q contributes to q + m - zero.
    for q in 0..n_bins as i64 {
        let src = &signal[(q as usize) * channels..(q as usize + 1) * channels];
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (m, &k) in kernel.iter().enumerate() {
            let n = q + m as i64 - zero;
            if n < 0 || n >= n_bins as i64 {
                continue;
            }
            let dst = &mut out[(n as usize) * channels..(n as usize + 1) * channels];
            for c in 0..channels {
                dst[c] += k * src[c];
            }
        }
    }
    Ok(())
}

/// Adjoint of [`convolve_channels`] for reverse-mode differentiation.
///
/// Given the gradient of some scalar with respect to the convolved output,
/// writes the gradient with respect to the raw signal.
pub fn correlate_channels(
    adjoint_out: &[f64],
    n_bins: usize,
    channels: usize,
    impulse: &ImpulseResponse,
    adjoint_signal: &mut [f64],
) -> Result<()> {
    check_kernel(impulse, n_bins)?;
    debug_assert_eq!(adjoint_out.len(), n_bins * channels);
    debug_assert_eq!(adjoint_signal.len(), n_bins * channels);
    adjoint_signal.fill(0.0);
    let kernel = impulse.kernel();
    let zero = impulse.zero_index() as i64;
    for q in 0..n_bins as i64 {
        let dst = &mut adjoint_signal[(q as usize) * channels..(q as usize + 1) * channels];
        for (m, &k) in kernel.iter().enumerate() {
            let n = q + m as i64 - zero;
            if n < 0 || n >= n_bins as i64 {
                continue;
            }
            let src = &adjoint_out[(n as usize) * channels..(n as usize + 1) * channels];
            for c in 0..channels {
                dst[c] += k * src[c];
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_kernel_is_identity() {
        let signal = vec![0.0, 1.5, 0.25, 0.0, 3.0];
        let out = convolve_bins(&signal, &ImpulseResponse::delta()).unwrap();
        assert_eq!(out, signal);
    }

    #[test]
    fn three_tap_example() {
        let ir = ImpulseResponse::new(vec![0.25, 0.5, 0.25], 1).unwrap();
        let mut signal = vec![0.0; 10];
        signal[5] = 1.0;
        let out = convolve_bins(&signal, &ir).unwrap();
        assert!((out[4] - 0.25).abs() < 1e-15);
        assert!((out[5] - 0.5).abs() < 1e-15);
        assert!((out[6] - 0.25).abs() < 1e-15);
        assert_eq!(out.iter().filter(|&&v| v != 0.0).count(), 3);
    }

    #[test]
    fn interior_support_preserves_total_mass() {
        // Oracle: summing the output must equal (sum kernel) * (sum signal)
        // as long as nothing clips at the axis boundary.
        let ir = ImpulseResponse::gaussian(2.0).unwrap();
        let mut signal = vec![0.0; 128];
        signal[40] = 0.7;
        signal[41] = 0.3;
        signal[77] = 2.0;
        let out = convolve_bins(&signal, &ir).unwrap();
        let expect = ir.sum() * signal.iter().sum::<f64>();
        assert!((out.iter().sum::<f64>() - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn boundary_mass_is_dropped() {
        let ir = ImpulseResponse::new(vec![0.25, 0.5, 0.25], 1).unwrap();
        let mut signal = vec![0.0; 4];
        signal[0] = 1.0;
        let out = convolve_bins(&signal, &ir).unwrap();
        // The m=0 tap would land at bin -1 and is discarded.
        assert!((out.iter().sum::<f64>() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn overlong_kernel_is_rejected() {
        let ir = ImpulseResponse::new(vec![0.1; 9], 4).unwrap();
        let signal = vec![0.0; 4];
        assert!(convolve_bins(&signal, &ir).is_err());
    }

    #[test]
    fn correlation_is_the_transpose() {
        // <conv(x), y> == <x, corr(y)> for arbitrary vectors.
        let ir = ImpulseResponse::new(vec![0.2, 0.5, 0.1, 0.2], 2).unwrap();
        let x: Vec<f64> = (0..16).map(|i| ((i * 7 + 3) % 5) as f64 * 0.25).collect();
        let y: Vec<f64> = (0..16).map(|i| ((i * 3 + 1) % 7) as f64 * 0.5 - 1.0).collect();
        let cx = convolve_bins(&x, &ir).unwrap();
        let cty = correlate_bins(&y, &ir).unwrap();
        let lhs: f64 = cx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&cty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn multichannel_matches_per_channel() {
        let ir = ImpulseResponse::gaussian(1.5).unwrap();
        let n_bins = 32;
        let channels = 3;
        let mut interleaved = vec![0.0; n_bins * channels];
        let mut per_channel = vec![vec![0.0; n_bins]; channels];
        let mut state = 1u64;
        for n in 0..n_bins {
            for c in 0..channels {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let v = (state >> 40) as f64 / (1u64 << 24) as f64;
                interleaved[n * channels + c] = v;
                per_channel[c][n] = v;
            }
        }
        let mut out = vec![0.0; n_bins * channels];
        convolve_channels(&interleaved, n_bins, channels, &ir, &mut out).unwrap();
        for c in 0..channels {
            let expect = convolve_bins(&per_channel[c], &ir).unwrap();
            for n in 0..n_bins {
                assert!((out[n * channels + c] - expect[n]).abs() < 1e-12);
            }
        }
    }
}
