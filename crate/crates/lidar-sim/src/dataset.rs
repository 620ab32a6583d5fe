//! Multiview dataset bundles: a directory of per-view histograms plus a
//! `meta.json` that makes them reproducible and consumable downstream.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use transient_core::error::{invalid, Result};
use transient_core::io::{read_trns, write_trns};
use transient_core::rng::stream_seed;
use transient_core::{
    ImpulseResponse, Intrinsics, LidarNoiseParams, RigidPose, TimeAxis, TransientImage, Vec3,
};

use crate::scene::AnalyticScene;
use crate::sim::{calibrate_flux_scale, simulate_view, SimConfig, SimStats};

pub const META_FORMAT_VERSION: u32 = 1;
pub const META_FILE: &str = "meta.json";

const STREAM_VIEW_NOISE: u64 = 0xA0;

/// Everything needed to interpret (or regenerate) a dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub scene: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub camera: Intrinsics,
    /// Row-major 4x4 camera-to-world matrices, one per view.
    pub poses: Vec<[f64; 16]>,
    pub time_axis: TimeAxis,
    pub impulse: ImpulseResponse,
    pub noise: LidarNoiseParams,
    pub footprint_sigma: f64,
    pub footprint_samples: usize,
    pub flux_scale: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_target: Option<f64>,
    /// World-space bounds of the scene's finite geometry, `[min, max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_aabb: Option<[[f64; 3]; 2]>,
}

impl DatasetMeta {
    pub fn n_views(&self) -> usize {
        self.poses.len()
    }

    pub fn pose(&self, view: usize) -> Result<RigidPose> {
        let m = self
            .poses
            .get(view)
            .ok_or_else(|| invalid(format!("view {view} out of range ({} views)", self.poses.len())))?;
        RigidPose::from_matrix_rows(m)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(META_FILE))?;
        let meta: DatasetMeta =
            serde_json::from_str(&text).map_err(|e| invalid(format!("meta parse error: {e}")))?;
        if meta.format_version != META_FORMAT_VERSION {
            return Err(invalid(format!(
                "unsupported meta format_version {}",
                meta.format_version
            )));
        }
        Ok(meta)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| invalid(format!("meta serialize error: {e}")))?;
        std::fs::write(dir.join(META_FILE), text)?;
        Ok(())
    }
}

pub fn clean_view_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view_{view}_clean.trns"))
}

pub fn noisy_view_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view_{view}_noisy.trns"))
}

pub fn load_clean_view(dir: &Path, view: usize) -> Result<TransientImage> {
    read_trns(&clean_view_path(dir, view))
}

pub fn load_noisy_view(dir: &Path, view: usize) -> Result<TransientImage> {
    read_trns(&noisy_view_path(dir, view))
}

/// Camera poses on a circle of the given radius and elevation (degrees above
/// the horizontal plane), all looking at the origin with +z as world up.
/// View k sits at azimuth k * 360 / n.
pub fn circle_poses(radius: f64, elevation_deg: f64, n_views: usize) -> Result<Vec<RigidPose>> {
    if n_views == 0 {
        return Err(invalid("need at least one view"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    if !(elevation_deg.is_finite() && elevation_deg.abs() < 90.0) {
        return Err(invalid(format!("elevation must be in (-90, 90), got {elevation_deg}")));
    }
    let elev = elevation_deg.to_radians();
    let mut poses = Vec::with_capacity(n_views);
    for k in 0..n_views {
        let az = 2.0 * std::f64::consts::PI * k as f64 / n_views as f64;
        let eye = Vec3::new(
            radius * elev.cos() * az.cos(),
            radius * elev.cos() * az.sin(),
            radius * elev.sin(),
        );
        poses.push(RigidPose::look_at(eye, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0))?);
    }
    Ok(poses)
}

/// Options for [`generate_dataset`] beyond the per-view simulation config.
#[derive(Debug, Clone)]
pub struct DatasetRequest {
    pub scene: AnalyticScene,
    pub camera: Intrinsics,
    pub poses: Vec<RigidPose>,
    pub width: usize,
    pub height: usize,
    pub config: SimConfig,
    /// When set, rescales the flux so the mean expected signal count over
    /// occupied pixels (across all views) matches this value.
    pub counts_target: Option<f64>,
}

/// Simulates every view, optionally calibrates the flux, and writes the
/// bundle: `meta.json` plus `view_{k}_clean.trns` (expected rates) and
/// `view_{k}_noisy.trns` (sampled counts) per view.
///
/// The result is a pure function of the request, so regenerating into a
/// fresh directory reproduces the files byte for byte.
pub fn generate_dataset(request: &DatasetRequest, out_dir: &Path) -> Result<(DatasetMeta, SimStats)> {
    let DatasetRequest { scene, camera, poses, width, height, config, counts_target } = request;
    scene.validate()?;
    config.validate()?;
    if poses.is_empty() {
        return Err(invalid("dataset needs at least one pose"));
    }

    let mut config = config.clone();
    if let Some(target) = counts_target {
        let mut unit = config.clone();
        unit.flux_scale = 1.0;
        let mut unit_rates = Vec::with_capacity(poses.len());
        for pose in poses {
            let cam = transient_core::CameraModel::new(camera.clone(), *pose)?;
            let (rate, _) = simulate_view(scene, &cam, *width, *height, &unit)?;
            unit_rates.push(rate);
        }
        config.flux_scale = calibrate_flux_scale(&unit_rates, &config.noise, *target)?;
    }

    std::fs::create_dir_all(out_dir)?;
    let mut stats = SimStats::default();
    for (k, pose) in poses.iter().enumerate() {
        let cam = transient_core::CameraModel::new(camera.clone(), *pose)?;
        let (rate, view_stats) = simulate_view(scene, &cam, *width, *height, &config)?;
        stats.merge(&view_stats);
        let noise_seed = stream_seed(config.seed, &[STREAM_VIEW_NOISE, k as u64]);
        let counts = crate::poisson::sample_counts(&rate, &config.noise, noise_seed)?;
        write_trns(&rate, &clean_view_path(out_dir, k))?;
        write_trns(&counts, &noisy_view_path(out_dir, k))?;
    }

    let meta = DatasetMeta {
        format_version: META_FORMAT_VERSION,
        scene: scene.name.clone(),
        width: *width,
        height: *height,
        channels: scene.channels,
        camera: camera.clone(),
        poses: poses.iter().map(|p| p.to_matrix_rows()).collect(),
        time_axis: config.time_axis.clone(),
        impulse: config.impulse.clone(),
        noise: config.noise,
        footprint_sigma: config.footprint_sigma,
        footprint_samples: config.footprint_samples,
        flux_scale: config.flux_scale,
        seed: config.seed,
        counts_target: *counts_target,
        scene_aabb: scene.bounds().map(|b| [b.min.to_array(), b.max.to_array()]),
    };
    meta.write(out_dir)?;
    Ok((meta, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Primitive, Shape};

    fn small_request() -> DatasetRequest {
        let scene = AnalyticScene {
            name: "ball".into(),
            channels: 1,
            primitives: vec![Primitive {
                shape: Shape::Sphere { center: [0.0, 0.0, 0.0], radius: 0.3 },
                albedo: vec![0.8],
            }],
        };
        DatasetRequest {
            scene,
            camera: Intrinsics::Pinhole { fx: 10.0, fy: 10.0, cx: 3.0, cy: 3.0 },
            poses: circle_poses(1.5, 20.0, 3).unwrap(),
            width: 6,
            height: 6,
            config: SimConfig {
                time_axis: TimeAxis::new(128, 1e-10, 6e-9).unwrap(),
                impulse: ImpulseResponse::gaussian(1.5).unwrap(),
                noise: LidarNoiseParams::from_background(1000, 0.5, 0.002).unwrap(),
                footprint_sigma: 0.0,
                footprint_samples: 1,
                flux_scale: 1.0,
                seed: 1234,
            },
            counts_target: Some(500.0),
        }
    }

    #[test]
    fn circle_poses_look_at_origin() {
        let poses = circle_poses(2.0, 30.0, 5).unwrap();
        assert_eq!(poses.len(), 5);
        for pose in &poses {
            assert!((pose.translation.length() - 2.0).abs() < 1e-12);
            let forward = pose.apply_direction(Vec3::new(0.0, 0.0, 1.0));
            let to_origin = (Vec3::ZERO - pose.translation).normalized().unwrap();
            assert!((forward - to_origin).length() < 1e-12);
            // Elevation 30 degrees above the horizon.
            assert!((pose.translation.z - 2.0 * 30f64.to_radians().sin()).abs() < 1e-12);
        }
        // Distinct azimuths.
        assert!((poses[0].translation - poses[1].translation).length() > 0.1);
    }

    #[test]
    fn bundle_round_trips_and_is_reproducible() {
        let request = small_request();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let (meta_a, stats_a) = generate_dataset(&request, dir_a.path()).unwrap();
        let (_, stats_b) = generate_dataset(&request, dir_b.path()).unwrap();
        assert_eq!(stats_a, stats_b);

        for k in 0..3 {
            for path_fn in [clean_view_path, noisy_view_path] {
                let a = std::fs::read(path_fn(dir_a.path(), k)).unwrap();
                let b = std::fs::read(path_fn(dir_b.path(), k)).unwrap();
                assert_eq!(a, b, "view {k} differs between runs");
            }
        }
        let meta_text_a = std::fs::read(dir_a.path().join(META_FILE)).unwrap();
        let meta_text_b = std::fs::read(dir_b.path().join(META_FILE)).unwrap();
        assert_eq!(meta_text_a, meta_text_b);

        let meta = DatasetMeta::read(dir_a.path()).unwrap();
        assert_eq!(meta.n_views(), 3);
        assert_eq!(meta.width, 6);
        assert_eq!(meta.channels, 1);
        assert!(meta.flux_scale > 0.0);
        assert_eq!(meta.counts_target, Some(500.0));
        let aabb = meta.scene_aabb.unwrap();
        assert_eq!(aabb[0], [-0.3, -0.3, -0.3]);
        assert_eq!(aabb[1], [0.3, 0.3, 0.3]);
        for k in 0..3 {
            let pose = meta.pose(k).unwrap();
            assert!((pose.translation - request.poses[k].translation).length() < 1e-12);
        }
        assert!(meta_a.flux_scale > 1.0, "tiny scene needs flux above unity");

        let clean = load_clean_view(dir_a.path(), 0).unwrap();
        let noisy = load_noisy_view(dir_a.path(), 0).unwrap();
        assert_eq!(clean.kind(), transient_core::TransientKind::Rate);
        assert_eq!(noisy.kind(), transient_core::TransientKind::NoisyCounts);
        assert_eq!(clean.n_bins(), 128);
        assert!(clean.total() > 0.0);
        assert!(noisy.total() > 0.0);
    }

    #[test]
    fn calibration_brings_counts_near_target() {
        let request = small_request();
        let dir = tempfile::tempdir().unwrap();
        let (meta, _) = generate_dataset(&request, dir.path()).unwrap();
        let mut occupied = 0u64;
        let mut total = 0.0f64;
        for k in 0..meta.n_views() {
            let clean = load_clean_view(dir.path(), k).unwrap();
            for row in 0..clean.height() {
                for col in 0..clean.width() {
                    let s: f64 = clean.pixel(row, col).iter().map(|&v| v as f64).sum();
                    if s > 0.0 {
                        occupied += 1;
                        total += meta.noise.signal_scale() * s;
                    }
                }
            }
        }
        let mean = total / occupied as f64;
        assert!((mean - 500.0).abs() < 1.0, "mean occupied counts {mean}");
    }

    #[test]
    fn unknown_meta_version_rejected() {
        let request = small_request();
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(&request, dir.path()).unwrap();
        let path = dir.path().join(META_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"format_version\": 1", "\"format_version\": 9")).unwrap();
        assert!(DatasetMeta::read(dir.path()).is_err());
    }
}
