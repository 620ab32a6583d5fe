//! Orchestration: render trained checkpoints into view directories and
//! evaluate rendered views against reference datasets.

use std::path::{Path, PathBuf};

use field_model::read_checkpoint;
use serde::{Deserialize, Serialize};
use transient_core::error::{invalid, Result};
use transient_core::io::write_trns;
use transient_core::CameraModel;
use transient_renderer::{render_view, RenderConfig};

use lidar_sim::dataset::{load_clean_view, DatasetMeta};
use training::{render_seed, TrainMeta, FINAL_CHECKPOINT_FILE};

use crate::lmf::lmf_depth_map;
use crate::metrics::{depth_l1, intensity_psnr, MetricsReport, ViewMetrics};
use crate::timg::{read_timg, write_pgm_preview, write_timg, ImagePlane};

pub const RENDER_META_FILE: &str = "render_meta.json";
pub const RENDER_META_VERSION: u32 = 1;

/// Provenance for a directory of rendered views.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderMeta {
    pub format_version: u32,
    pub views: Vec<usize>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Normalization constant the checkpoint was trained against; rendered
    /// values live in counts / normalization units.
    pub normalization: f64,
    pub step_size: f64,
    pub min_distance: f64,
    pub footprint_sigma: f64,
    pub footprint_samples: usize,
    pub seed: u64,
}

impl RenderMeta {
    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(RENDER_META_FILE))?;
        let meta: RenderMeta = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("render meta parse error: {e}")))?;
        if meta.format_version != RENDER_META_VERSION {
            return Err(invalid(format!(
                "unsupported render meta format_version {}",
                meta.format_version
            )));
        }
        Ok(meta)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| invalid(format!("render meta serialize error: {e}")))?;
        std::fs::write(dir.join(RENDER_META_FILE), text)?;
        Ok(())
    }
}

pub fn rendered_transient_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view_{view}_render.trns"))
}

pub fn intensity_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view_{view}_intensity.timg"))
}

pub fn depth_path(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view_{view}_depth.timg"))
}

/// Renders dataset views from a training run's final checkpoint.
///
/// `train_dir` must hold a checkpoint and its metadata; the dataset supplies
/// cameras, poses, and the time axis. Writes per view a rendered transient,
/// intensity and depth images, optional graymap previews, and a
/// `render_meta.json` echo.
pub fn render_outputs(
    train_dir: &Path,
    data_dir: &Path,
    views: Option<&[usize]>,
    out_dir: &Path,
    previews: bool,
) -> Result<RenderMeta> {
    let train_meta = TrainMeta::read(train_dir)?;
    let field = read_checkpoint(&train_dir.join(FINAL_CHECKPOINT_FILE))?;
    let meta = DatasetMeta::read(data_dir)?;
    let views: Vec<usize> = match views {
        Some(v) if v.is_empty() => return Err(invalid("view list must not be empty")),
        Some(v) => v.to_vec(),
        None => (0..meta.n_views()).collect(),
    };

    let config = RenderConfig {
        time_axis: meta.time_axis.clone(),
        impulse: meta.impulse.clone(),
        t_near: 0.0,
        t_far: 1e9,
        step_size: train_meta.step_size,
        min_distance: train_meta.min_distance,
        footprint_sigma: train_meta.footprint_sigma,
        footprint_samples: train_meta.footprint_samples,
        seed: render_seed(train_meta.seed),
    };
    config.validate()?;

    std::fs::create_dir_all(out_dir)?;
    for &v in &views {
        let camera = CameraModel::new(meta.camera.clone(), meta.pose(v)?)?;
        let rendered = render_view(&field, &camera, meta.width, meta.height, &config)?;
        write_trns(&rendered.transient, &rendered_transient_path(out_dir, v))?;
        let intensity =
            ImagePlane::from_data(meta.height, meta.width, field.channels(), rendered.intensity)?;
        write_timg(&intensity, &intensity_path(out_dir, v))?;
        let depth = ImagePlane::from_data(meta.height, meta.width, 1, rendered.depth)?;
        write_timg(&depth, &depth_path(out_dir, v))?;
        if previews {
            write_pgm_preview(&intensity, &out_dir.join(format!("view_{v}_intensity.pgm")))?;
            write_pgm_preview(&depth, &out_dir.join(format!("view_{v}_depth.pgm")))?;
        }
    }

    let render_meta = RenderMeta {
        format_version: RENDER_META_VERSION,
        views,
        width: meta.width,
        height: meta.height,
        channels: field.channels(),
        normalization: train_meta.normalization,
        step_size: config.step_size,
        min_distance: config.min_distance,
        footprint_sigma: config.footprint_sigma,
        footprint_samples: config.footprint_samples,
        seed: config.seed,
    };
    render_meta.write(out_dir)?;
    Ok(render_meta)
}

/// Bin-integrated reference intensity in model units: clean rates scaled by
/// `signal_scale / normalization`.
fn reference_intensity(
    clean: &transient_core::TransientImage,
    scale: f64,
) -> Vec<f32> {
    let channels = clean.channels();
    let mut out = vec![0.0f32; clean.height() * clean.width() * channels];
    for row in 0..clean.height() {
        for col in 0..clean.width() {
            let px = clean.pixel(row, col);
            let base = (row * clean.width() + col) * channels;
            for (bin_idx, &v) in px.iter().enumerate() {
                out[base + bin_idx % channels] += (f64::from(v) * scale) as f32;
            }
        }
    }
    out
}

/// Compares rendered views in `pred_dir` against the clean references of the
/// dataset in `ref_dir`: gamma-corrected PSNR on intensity (peak taken from
/// each view's reference) and masked depth L1 against matched-filter depths.
pub fn evaluate(pred_dir: &Path, ref_dir: &Path) -> Result<MetricsReport> {
    let render_meta = RenderMeta::read(pred_dir)?;
    let meta = DatasetMeta::read(ref_dir)?;
    if render_meta.width != meta.width || render_meta.height != meta.height {
        return Err(invalid("rendered and reference frame sizes disagree"));
    }
    let scale = meta.noise.signal_scale() / render_meta.normalization;

    let mut views = Vec::with_capacity(render_meta.views.len());
    for &v in &render_meta.views {
        let clean = load_clean_view(ref_dir, v)?;
        let reference = reference_intensity(&clean, scale);
        let rendered = read_timg(&intensity_path(pred_dir, v))?;
        if rendered.channels() != clean.channels() {
            return Err(invalid(format!("view {v}: channel count mismatch")));
        }
        let peak = reference.iter().copied().fold(0.0f32, f32::max) as f64;
        if peak <= 0.0 {
            return Err(invalid(format!("view {v}: reference image has no signal")));
        }
        let psnr = intensity_psnr(rendered.data(), &reference, peak)?;

        let ref_depth = lmf_depth_map(&clean, &meta.impulse, &meta.time_axis);
        let pred_depth = read_timg(&depth_path(pred_dir, v))?;
        let depth = depth_l1(pred_depth.data(), &ref_depth)?;

        views.push(ViewMetrics {
            view: v,
            psnr_db: psnr.db,
            psnr_infinite: psnr.infinite,
            peak,
            depth_l1: depth.mean_abs,
            valid_depth_pixels: depth.valid_pixels,
            invalid_rendered_depth: depth.invalid_rendered,
            invalid_reference_depth: depth.invalid_reference,
        });
    }
    MetricsReport::from_views(
        pred_dir.display().to_string(),
        ref_dir.display().to_string(),
        scale,
        views,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use lidar_sim::dataset::{circle_poses, generate_dataset, DatasetRequest};
    use lidar_sim::scene::{AnalyticScene, Primitive, Shape};
    use lidar_sim::sim::SimConfig;
    use training::{train, TrainConfig};
    use transient_core::{ImpulseResponse, Intrinsics, LidarNoiseParams, TimeAxis};

    fn tiny_dataset(dir: &Path) {
        let scene = AnalyticScene {
            name: "ball".into(),
            channels: 1,
            primitives: vec![Primitive {
                shape: Shape::Sphere { center: [0.0, 0.0, 0.0], radius: 0.25 },
                albedo: vec![0.9],
            }],
        };
        let request = DatasetRequest {
            scene,
            camera: Intrinsics::Pinhole { fx: 14.0, fy: 14.0, cx: 4.0, cy: 4.0 },
            poses: circle_poses(1.2, 15.0, 2).unwrap(),
            width: 8,
            height: 8,
            config: SimConfig {
                time_axis: TimeAxis::new(96, 4.2e-11, 6e-9).unwrap(),
                impulse: ImpulseResponse::gaussian(1.2).unwrap(),
                noise: LidarNoiseParams::from_background(5000, 0.5, 0.01).unwrap(),
                footprint_sigma: 0.0,
                footprint_samples: 1,
                flux_scale: 1.0,
                seed: 99,
            },
            counts_target: Some(1500.0),
        };
        generate_dataset(&request, dir).unwrap();
    }

    #[test]
    fn render_then_evaluate_round_trip() {
        let data = tempfile::tempdir().unwrap();
        tiny_dataset(data.path());
        let train_dir = tempfile::tempdir().unwrap();
        let mut cfg = TrainConfig::new(40);
        cfg.batch_size = 32;
        cfg.grid_resolution = [7, 7, 7];
        cfg.seed = 3;
        train(data.path(), train_dir.path(), &cfg).unwrap();

        let out = tempfile::tempdir().unwrap();
        let rm = render_outputs(train_dir.path(), data.path(), Some(&[1]), out.path(), true)
            .unwrap();
        assert_eq!(rm.views, vec![1]);
        assert!(rendered_transient_path(out.path(), 1).exists());
        assert!(intensity_path(out.path(), 1).exists());
        assert!(depth_path(out.path(), 1).exists());
        assert!(out.path().join("view_1_intensity.pgm").exists());

        let report = evaluate(out.path(), data.path()).unwrap();
        assert_eq!(report.views.len(), 1);
        assert_eq!(report.views[0].view, 1);
        assert!(report.views[0].peak > 0.0);
        assert!(report.mean_depth_l1 >= 0.0);
        // A 40-iteration model is far from the data; PSNR exists but is finite.
        assert!(!report.mean_psnr_infinite);

        // Rendering twice with the same inputs is bit-identical.
        let out2 = tempfile::tempdir().unwrap();
        render_outputs(train_dir.path(), data.path(), Some(&[1]), out2.path(), false).unwrap();
        let a = std::fs::read(rendered_transient_path(out.path(), 1)).unwrap();
        let b = std::fs::read(rendered_transient_path(out2.path(), 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_evaluation_of_reference_depths_is_zero() {
        // Evaluating a prediction that equals the reference must produce the
        // infinite-PSNR flag and zero depth error; build that prediction by
        // hand from the clean view.
        let data = tempfile::tempdir().unwrap();
        tiny_dataset(data.path());
        let meta = DatasetMeta::read(data.path()).unwrap();
        let clean = load_clean_view(data.path(), 0).unwrap();
        let scale = meta.noise.signal_scale() / 7.5;

        let pred = tempfile::tempdir().unwrap();
        let intensity = ImagePlane::from_data(
            meta.height,
            meta.width,
            meta.channels,
            reference_intensity(&clean, scale),
        )
        .unwrap();
        write_timg(&intensity, &intensity_path(pred.path(), 0)).unwrap();
        let depths = lmf_depth_map(&clean, &meta.impulse, &meta.time_axis);
        let depth = ImagePlane::from_data(meta.height, meta.width, 1, depths).unwrap();
        write_timg(&depth, &depth_path(pred.path(), 0)).unwrap();
        RenderMeta {
            format_version: RENDER_META_VERSION,
            views: vec![0],
            width: meta.width,
            height: meta.height,
            channels: meta.channels,
            normalization: 7.5,
            step_size: 1e-3,
            min_distance: 1e-2,
            footprint_sigma: 0.0,
            footprint_samples: 1,
            seed: 0,
        }
        .write(pred.path())
        .unwrap();

        let report = evaluate(pred.path(), data.path()).unwrap();
        assert!(report.mean_psnr_infinite);
        assert!(report.mean_psnr_db.is_none());
        assert_eq!(report.mean_depth_l1, 0.0);
    }
}
