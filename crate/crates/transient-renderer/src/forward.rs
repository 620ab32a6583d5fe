//! Forward rendering: voxel field to time-resolved histograms, intensity,
//! and depth.

use field_model::VoxelField;
use rayon::prelude::*;
use transient_core::error::{invalid, Result};
use transient_core::rng::stream_seed;
use transient_core::{
    convolve_channels, footprint_samples, splat_weights, CameraModel, Ray, TransientImage,
    TransientKind,
};

use crate::config::RenderConfig;
use crate::march::{march, RaySamples};

const STREAM_FOOTPRINT: u64 = 0xF0;

/// Depth histograms whose peak falls below this are treated as empty space.
pub const DEPTH_EMPTY_THRESHOLD: f64 = 1e-6;

/// Sentinel depth for pixels that saw no surface.
pub const DEPTH_INVALID: f32 = -1.0;

/// One footprint ray and its cached march.
#[derive(Debug, Clone)]
pub struct RayContribution {
    pub ray: Ray,
    pub weight: f64,
    /// None when the ray misses the field bounds.
    pub samples: Option<RaySamples>,
}

/// Cached forward pass for one pixel.
#[derive(Debug, Clone)]
pub struct PixelForward {
    /// Pulse-convolved transient, `n_bins * channels`, bin-major.
    pub tau_f: Vec<f64>,
    pub rays: Vec<RayContribution>,
}

/// Accumulates one marched ray into a pre-convolution transient. Sample k
/// contributes `T_k^2 alpha_k radiance_k / max(d_k, min_distance)^2`, split
/// linearly over the two bins bracketing the round-trip time; mass outside
/// the axis is dropped.
pub fn accumulate_ray_tau(
    samples: &RaySamples,
    config: &RenderConfig,
    channels: usize,
    weight: f64,
    accum: &mut [f64],
) {
    let axis = &config.time_axis;
    let n_bins = axis.n_bins();
    debug_assert_eq!(accum.len(), n_bins * channels);
    for k in 0..samples.len() {
        let alpha = samples.alpha[k];
        if alpha == 0.0 {
            continue;
        }
        let d = samples.distances[k];
        let t = samples.transmittance[k];
        let dd = d.max(config.min_distance);
        let geom = weight * t * t * alpha / (dd * dd);
        let (lo, w_lo, w_hi) = splat_weights(axis.bin_of_one_way_distance(d));
        let lo_in = lo >= 0 && (lo as usize) < n_bins;
        let hi_in = lo + 1 >= 0 && ((lo + 1) as usize) < n_bins;
        for c in 0..channels {
            let value = geom * samples.radiance[k * channels + c];
            if lo_in {
                accum[lo as usize * channels + c] += value * w_lo;
            }
            if hi_in {
                accum[(lo + 1) as usize * channels + c] += value * w_hi;
            }
        }
    }
}

/// Renders one pixel: footprint rays are marched, their transients averaged
/// with the footprint weights, and the result convolved with the pulse.
pub fn render_pixel_forward(
    field: &VoxelField,
    camera: &CameraModel,
    pixel: [f64; 2],
    config: &RenderConfig,
) -> Result<PixelForward> {
    let axis = &config.time_axis;
    let n_bins = axis.n_bins();
    let channels = field.channels();
    let fp_seed =
        stream_seed(config.seed, &[STREAM_FOOTPRINT, pixel[0].to_bits(), pixel[1].to_bits()]);
    let fp = footprint_samples(pixel, config.footprint_sigma, config.footprint_samples, fp_seed)?;

    let mut tau = vec![0.0f64; n_bins * channels];
    let mut rays = Vec::with_capacity(fp.len());
    for s in &fp {
        let ray = camera.ray_for_pixel(s.pixel)?;
        let samples = march(field, &ray, config);
        if let Some(samples) = &samples {
            accumulate_ray_tau(samples, config, channels, s.weight, &mut tau);
        }
        rays.push(RayContribution { ray, weight: s.weight, samples });
    }

    let mut tau_f = vec![0.0f64; n_bins * channels];
    convolve_channels(&tau, n_bins, channels, &config.impulse, &mut tau_f)?;
    Ok(PixelForward { tau_f, rays })
}

/// Per-channel bin sums of the convolved transient.
pub fn intensity_of(fwd: &PixelForward, channels: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; channels];
    for bin in fwd.tau_f.chunks(channels) {
        for (c, &v) in bin.iter().enumerate() {
            out[c] += v;
        }
    }
    out
}

/// Depth from the footprint-weighted ray termination histogram.
///
/// Each sample splats `T_k alpha_k` at its round-trip bin; the depth is the
/// one-way distance of the histogram argmax (earliest bin wins ties), or
/// [`DEPTH_INVALID`] when the peak stays below [`DEPTH_EMPTY_THRESHOLD`].
pub fn depth_of(fwd: &PixelForward, config: &RenderConfig) -> f64 {
    let axis = &config.time_axis;
    let n_bins = axis.n_bins();
    let mut hist = vec![0.0f64; n_bins];
    for contrib in &fwd.rays {
        let Some(samples) = &contrib.samples else {
            continue;
        };
        for k in 0..samples.len() {
            let mass = samples.transmittance[k] * samples.alpha[k];
            if mass == 0.0 {
                continue;
            }
            let (lo, w_lo, w_hi) = splat_weights(axis.bin_of_one_way_distance(samples.distances[k]));
            if lo >= 0 && (lo as usize) < n_bins {
                hist[lo as usize] += contrib.weight * mass * w_lo;
            }
            if lo + 1 >= 0 && ((lo + 1) as usize) < n_bins {
                hist[(lo + 1) as usize] += contrib.weight * mass * w_hi;
            }
        }
    }
    let mut best_bin = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (n, &h) in hist.iter().enumerate() {
        if h > best {
            best = h;
            best_bin = n;
        }
    }
    if best < DEPTH_EMPTY_THRESHOLD {
        return DEPTH_INVALID as f64;
    }
    axis.one_way_distance_at_bin(best_bin as f64)
}

/// A rendered view: transient cube plus derived intensity and depth maps.
#[derive(Debug, Clone)]
pub struct RenderedView {
    pub transient: TransientImage,
    /// Row-major `[height][width][channel]` bin-integrated intensity.
    pub intensity: Vec<f32>,
    /// Row-major depth map in meters; [`DEPTH_INVALID`] marks empty pixels.
    pub depth: Vec<f32>,
}

/// Renders a full frame in parallel. Pixel (row, col) is sampled at
/// continuous coordinates (col + 0.5, row + 0.5), matching the simulator.
pub fn render_view(
    field: &VoxelField,
    camera: &CameraModel,
    width: usize,
    height: usize,
    config: &RenderConfig,
) -> Result<RenderedView> {
    config.validate()?;
    if width == 0 || height == 0 {
        return Err(invalid("frame dimensions must be nonzero"));
    }
    let n_bins = config.time_axis.n_bins();
    let channels = field.channels();
    let stride = n_bins * channels;
    let mut data = vec![0.0f32; height * width * stride];
    let per_pixel: Vec<Result<(Vec<f64>, f64)>> = data
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(p, out)| {
            let row = p / width;
            let col = p % width;
            let pixel = [col as f64 + 0.5, row as f64 + 0.5];
            let fwd = render_pixel_forward(field, camera, pixel, config)?;
            for (dst, src) in out.iter_mut().zip(&fwd.tau_f) {
                *dst = *src as f32;
            }
            Ok((intensity_of(&fwd, channels), depth_of(&fwd, config)))
        })
        .collect();

    let mut intensity = Vec::with_capacity(height * width * channels);
    let mut depth = Vec::with_capacity(height * width);
    for r in per_pixel {
        let (i, d) = r?;
        intensity.extend(i.iter().map(|&v| v as f32));
        depth.push(d as f32);
    }
    let transient =
        TransientImage::from_data(height, width, n_bins, channels, TransientKind::Clean, data)?;
    Ok(RenderedView { transient, intensity, depth })
}
