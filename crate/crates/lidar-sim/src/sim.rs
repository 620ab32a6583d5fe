//! Forward model: expected photon arrival rates per time bin for analytic
//! scenes under confocal pulsed illumination.

use rayon::prelude::*;
use transient_core::error::{invalid, Result};
use transient_core::rng::stream_seed;
use transient_core::{
    convolve_channels, footprint_samples, splat_weights, CameraModel, ImpulseResponse,
    LidarNoiseParams, TimeAxis, TransientImage, TransientKind,
};

use crate::scene::{intersect, AnalyticScene};

const STREAM_FOOTPRINT: u64 = 0xF0;

/// Everything needed to turn a scene plus camera into histograms.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub time_axis: TimeAxis,
    pub impulse: ImpulseResponse,
    pub noise: LidarNoiseParams,
    /// Gaussian radius of the pixel footprint in pixels; zero collapses to a
    /// single central ray.
    pub footprint_sigma: f64,
    pub footprint_samples: usize,
    /// Linear scale applied to every arrival rate (laser power knob).
    pub flux_scale: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if !(self.flux_scale > 0.0 && self.flux_scale.is_finite()) {
            return Err(invalid(format!("flux_scale must be positive, got {}", self.flux_scale)));
        }
        if !(self.footprint_sigma >= 0.0 && self.footprint_sigma.is_finite()) {
            return Err(invalid(format!("footprint_sigma must be >= 0, got {}", self.footprint_sigma)));
        }
        if self.footprint_samples == 0 {
            return Err(invalid("need at least one footprint sample"));
        }
        Ok(())
    }
}

/// Counters describing how a frame's rays interacted with the scene.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub rays_total: u64,
    pub rays_hit: u64,
    /// Hits whose splatted pulse mass was not fully inside the time axis.
    pub clipped_hits: u64,
}

impl SimStats {
    pub fn merge(&mut self, other: &SimStats) {
        self.rays_total += other.rays_total;
        self.rays_hit += other.rays_hit;
        self.clipped_hits += other.clipped_hits;
    }
}

/// Expected arrival rate histogram for one pixel, `n_bins * channels` long,
/// bin-major. A surface at distance z contributes albedo * |cos| / z^2 times
/// `flux_scale`, linearly splat into the two bins bracketing the round-trip
/// time and then convolved with the pulse shape.
pub fn rate_transient(
    scene: &AnalyticScene,
    camera: &CameraModel,
    pixel: [f64; 2],
    config: &SimConfig,
) -> Result<(Vec<f64>, SimStats)> {
    let axis = &config.time_axis;
    let n_bins = axis.n_bins();
    let channels = scene.channels;
    let fp_seed = stream_seed(config.seed, &[STREAM_FOOTPRINT, pixel[0].to_bits(), pixel[1].to_bits()]);
    let samples =
        footprint_samples(pixel, config.footprint_sigma, config.footprint_samples, fp_seed)?;

    let mut impulses = vec![0.0f64; n_bins * channels];
    let mut stats = SimStats::default();
    for s in &samples {
        stats.rays_total += 1;
        let ray = camera.ray_for_pixel(s.pixel)?;
        let Some(hit) = intersect(scene, &ray) else {
            continue;
        };
        stats.rays_hit += 1;
        let z = hit.distance;
        let cos = hit.normal.dot(ray.direction).abs();
        let geom = cos / (z * z) * config.flux_scale * s.weight;
        let (lo, w_lo, w_hi) = splat_weights(axis.bin_of_one_way_distance(z));
        let lo_in = lo >= 0 && (lo as usize) < n_bins;
        let hi_in = lo + 1 >= 0 && ((lo + 1) as usize) < n_bins;
        if (!lo_in && w_lo > 0.0) || (!hi_in && w_hi > 0.0) {
            stats.clipped_hits += 1;
        }
        let albedo = &scene.primitives[hit.primitive].albedo;
        for (c, &rho) in albedo.iter().enumerate() {
            if lo_in {
                impulses[lo as usize * channels + c] += geom * rho * w_lo;
            }
            if hi_in {
                impulses[(lo + 1) as usize * channels + c] += geom * rho * w_hi;
            }
        }
    }

    let mut rate = vec![0.0f64; n_bins * channels];
    convolve_channels(&impulses, n_bins, channels, &config.impulse, &mut rate)?;
    Ok((rate, stats))
}

/// Renders the expected-rate cube for a full frame. Pixel (row, col) is
/// sampled at continuous coordinates (col + 0.5, row + 0.5).
pub fn simulate_view(
    scene: &AnalyticScene,
    camera: &CameraModel,
    width: usize,
    height: usize,
    config: &SimConfig,
) -> Result<(TransientImage, SimStats)> {
    scene.validate()?;
    config.validate()?;
    let n_bins = config.time_axis.n_bins();
    let channels = scene.channels;
    let stride = n_bins * channels;
    let mut data = vec![0.0f32; height * width * stride];
    let per_pixel: Vec<Result<SimStats>> = data
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(p, out)| {
            let row = p / width;
            let col = p % width;
            let pixel = [col as f64 + 0.5, row as f64 + 0.5];
            let (rate, stats) = rate_transient(scene, camera, pixel, config)?;
            for (dst, src) in out.iter_mut().zip(&rate) {
                *dst = *src as f32;
            }
            Ok(stats)
        })
        .collect();
    let mut stats = SimStats::default();
    for r in per_pixel {
        stats.merge(&r?);
    }
    let image = TransientImage::from_data(height, width, n_bins, channels, TransientKind::Rate, data)?;
    Ok((image, stats))
}

/// Picks the flux scale that makes the mean expected signal count over
/// occupied pixels (any nonzero rate) match `counts_target`. Rates must have
/// been rendered with `flux_scale = 1`.
pub fn calibrate_flux_scale(
    unit_rates: &[TransientImage],
    noise: &LidarNoiseParams,
    counts_target: f64,
) -> Result<f64> {
    if !(counts_target > 0.0 && counts_target.is_finite()) {
        return Err(invalid(format!("counts target must be positive, got {counts_target}")));
    }
    let scale = noise.signal_scale();
    let mut occupied = 0u64;
    let mut total = 0.0f64;
    for img in unit_rates {
        for row in 0..img.height() {
            for col in 0..img.width() {
                let sum: f64 = img.pixel(row, col).iter().map(|&v| v as f64).sum();
                if sum > 0.0 {
                    occupied += 1;
                    total += scale * sum;
                }
            }
        }
    }
    if occupied == 0 {
        return Err(invalid("no occupied pixels; cannot calibrate flux"));
    }
    let mean = total / occupied as f64;
    if mean <= 0.0 {
        return Err(invalid("occupied pixels have zero expected counts"));
    }
    Ok(counts_target / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Primitive, Shape};
    use transient_core::{Intrinsics, RigidPose};

    fn single_pixel_camera() -> CameraModel {
        // One-pixel frame whose center ray is exactly the +z axis.
        CameraModel::new(
            Intrinsics::Pinhole { fx: 100.0, fy: 100.0, cx: 0.5, cy: 0.5 },
            RigidPose::identity(),
        )
        .unwrap()
    }

    fn base_config(n_bins: usize) -> SimConfig {
        SimConfig {
            time_axis: TimeAxis::new(n_bins, 1e-10, 0.0).unwrap(),
            impulse: ImpulseResponse::delta(),
            noise: LidarNoiseParams::noiseless(1000).unwrap(),
            footprint_sigma: 0.0,
            footprint_samples: 1,
            flux_scale: 1.0,
            seed: 0,
        }
    }

    fn plane_scene(z: f64, normal: [f64; 3], albedo: f64) -> AnalyticScene {
        AnalyticScene {
            name: "plane".into(),
            channels: 1,
            primitives: vec![Primitive {
                shape: Shape::Plane { point: [0.0, 0.0, z], normal, extent: None },
                albedo: vec![albedo],
            }],
        }
    }

    #[test]
    fn facing_plane_total_mass_is_albedo_over_z_squared() {
        let scene = plane_scene(1.0, [0.0, 0.0, -1.0], 1.0);
        let cam = single_pixel_camera();
        let cfg = base_config(200);
        let (rate, stats) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        let total: f64 = rate.iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
        assert_eq!(stats, SimStats { rays_total: 1, rays_hit: 1, clipped_hits: 0 });
    }

    #[test]
    fn tilted_plane_picks_up_cosine_and_range_falloff() {
        // Normal 60 degrees off the viewing axis, surface crossing the axis
        // at z = 2: rate mass = 1 * cos(60) / 4 = 0.125.
        let s = (60.0f64).to_radians().sin();
        let c = (60.0f64).to_radians().cos();
        let scene = plane_scene(2.0, [s, 0.0, -c], 1.0);
        let cam = single_pixel_camera();
        let cfg = base_config(400);
        let (rate, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        let total: f64 = rate.iter().sum();
        assert!((total - 0.125).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn pulse_lands_at_round_trip_bin() {
        let cfg = base_config(200);
        let axis = &cfg.time_axis;
        let cam = single_pixel_camera();

        let z_exact = axis.one_way_distance_at_bin(10.0);
        let scene = plane_scene(z_exact, [0.0, 0.0, -1.0], 1.0);
        let (rate, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        let alpha = 1.0 / (z_exact * z_exact);
        assert!((rate[10] - alpha).abs() < 1e-12 * alpha);
        assert_eq!(rate.iter().filter(|&&v| v != 0.0).count(), 1);

        let z_half = axis.one_way_distance_at_bin(10.5);
        let scene = plane_scene(z_half, [0.0, 0.0, -1.0], 1.0);
        let (rate, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        let alpha = 1.0 / (z_half * z_half);
        assert!((rate[10] - 0.5 * alpha).abs() < 1e-9 * alpha);
        assert!((rate[11] - 0.5 * alpha).abs() < 1e-9 * alpha);
    }

    #[test]
    fn rate_scales_linearly_with_flux() {
        let scene = plane_scene(1.3, [0.1, -0.2, -1.0], 0.7);
        let cam = single_pixel_camera();
        let mut cfg = base_config(300);
        cfg.impulse = ImpulseResponse::gaussian(2.0).unwrap();
        let (base, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        cfg.flux_scale = 2.0;
        let (doubled, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        for (a, b) in base.iter().zip(&doubled) {
            assert_eq!(*b, 2.0 * *a);
        }
        cfg.flux_scale = 3.7;
        let (scaled, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((b - 3.7 * a).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn impulse_broadens_but_preserves_mass() {
        let scene = plane_scene(1.0, [0.0, 0.0, -1.0], 1.0);
        let cam = single_pixel_camera();
        let mut cfg = base_config(400);
        cfg.impulse = ImpulseResponse::gaussian(3.0).unwrap();
        let (rate, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        let total: f64 = rate.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "total {total}");
        assert!(rate.iter().filter(|&&v| v > 1e-9).count() > 10);
        let peak = rate.iter().cloned().fold(0.0f64, f64::max);
        assert!(peak < 0.2);
    }

    #[test]
    fn returns_outside_the_axis_are_counted_clipped() {
        // 10 bins at 0.1 ns cover one-way ranges up to ~0.15 m; a plane at
        // z = 1 lands far outside.
        let scene = plane_scene(1.0, [0.0, 0.0, -1.0], 1.0);
        let cam = single_pixel_camera();
        let cfg = base_config(10);
        let (rate, stats) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        assert!(rate.iter().all(|&v| v == 0.0));
        assert_eq!(stats.clipped_hits, 1);
    }

    #[test]
    fn multichannel_albedo_scales_per_channel() {
        let scene = AnalyticScene {
            name: "rgb".into(),
            channels: 3,
            primitives: vec![Primitive {
                shape: Shape::Plane { point: [0.0, 0.0, 1.0], normal: [0.0, 0.0, -1.0], extent: None },
                albedo: vec![0.9, 0.5, 0.1],
            }],
        };
        let cam = single_pixel_camera();
        let cfg = base_config(200);
        let (rate, _) = rate_transient(&scene, &cam, [0.5, 0.5], &cfg).unwrap();
        let mut per_channel = [0.0f64; 3];
        for bin in rate.chunks(3) {
            for (c, v) in bin.iter().enumerate() {
                per_channel[c] += v;
            }
        }
        assert!((per_channel[0] - 0.9).abs() < 1e-12);
        assert!((per_channel[1] - 0.5).abs() < 1e-12);
        assert!((per_channel[2] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn simulate_view_is_deterministic() {
        let scene = AnalyticScene {
            name: "s".into(),
            channels: 1,
            primitives: vec![Primitive {
                shape: Shape::Sphere { center: [0.0, 0.0, 1.5], radius: 0.5 },
                albedo: vec![0.8],
            }],
        };
        let cam = CameraModel::new(
            Intrinsics::Pinhole { fx: 12.0, fy: 12.0, cx: 4.0, cy: 4.0 },
            RigidPose::identity(),
        )
        .unwrap();
        let mut cfg = base_config(256);
        cfg.footprint_sigma = 0.15;
        cfg.footprint_samples = 8;
        cfg.seed = 77;
        let (a, stats_a) = simulate_view(&scene, &cam, 8, 8, &cfg).unwrap();
        let (b, stats_b) = simulate_view(&scene, &cam, 8, 8, &cfg).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(stats_a, stats_b);
        assert_eq!(stats_a.rays_total, 8 * 8 * 8);
        assert!(stats_a.rays_hit > 0);
        assert!(a.total() > 0.0);
    }

    #[test]
    fn calibration_hits_counts_target() {
        let scene = plane_scene(1.2, [0.0, 0.0, -1.0], 0.6);
        let cam = CameraModel::new(
            Intrinsics::Pinhole { fx: 20.0, fy: 20.0, cx: 4.0, cy: 4.0 },
            RigidPose::identity(),
        )
        .unwrap();
        let mut cfg = base_config(300);
        cfg.noise = LidarNoiseParams::new(2000, 0.4, 0.0, 0.0).unwrap();
        let (unit, _) = simulate_view(&scene, &cam, 8, 8, &cfg).unwrap();
        let target = 2850.0;
        let flux = calibrate_flux_scale(&[unit], &cfg.noise, target).unwrap();
        cfg.flux_scale = flux;
        let (calibrated, _) = simulate_view(&scene, &cam, 8, 8, &cfg).unwrap();
        let mut occupied = 0u64;
        let mut total = 0.0f64;
        for row in 0..8 {
            for col in 0..8 {
                let s: f64 = calibrated.pixel(row, col).iter().map(|&v| v as f64).sum();
                if s > 0.0 {
                    occupied += 1;
                    total += cfg.noise.signal_scale() * s;
                }
            }
        }
        let mean = total / occupied as f64;
        assert_eq!(occupied, 64);
        assert!((mean - target).abs() < 1e-4 * target, "mean {mean}");
    }

    #[test]
    fn calibration_rejects_empty_frames() {
        let empty = TransientImage::new_zeroed(4, 4, 16, 1, TransientKind::Rate).unwrap();
        let noise = LidarNoiseParams::noiseless(100).unwrap();
        assert!(calibrate_flux_scale(&[empty], &noise, 2850.0).is_err());
    }
}
