//! The reconstruction loop: batched pixel sampling, fused forward/backward
//! rendering, deterministic gradient accumulation, and Adam.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use field_model::{write_checkpoint, ParamGradients, VoxelField};
use lidar_sim::dataset::{load_noisy_view, DatasetMeta};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use transient_core::error::{invalid, Result};
use transient_core::rng::{stream_seed, SplitMix64};
use transient_core::{Aabb, CameraModel, TransientImage};
use transient_renderer::{pixel_backward, render_pixel_forward, CarveSpec, RenderConfig};

use crate::adam::{learning_rate_at, OptimizerState};
use crate::loss::{carving_mask, loss_tau};

/// Gradient accumulation buffers. The batch is split into this many fixed
/// index chunks, each accumulated independently and reduced in chunk order,
/// so results are bit-identical no matter how many threads run.
pub const NUM_ACCUM_SLOTS: usize = 8;

/// Fraction of the bounds diagonal added around metadata-derived bounds.
pub const BBOX_PAD_FRACTION: f64 = 0.05;

pub const FINAL_CHECKPOINT_FILE: &str = "checkpoint_final.tnrf";
pub const DIVERGED_CHECKPOINT_FILE: &str = "checkpoint_diverged.tnrf";
pub const TRAIN_META_FILE: &str = "train_meta.json";
pub const METRICS_FILE: &str = "metrics.ndjson";

const STREAM_EPOCH: u64 = 0xE0;
const STREAM_RENDER: u64 = 0x5E;

/// Renderer seed substream for a training seed; rendering a checkpoint with
/// this seed reproduces the footprint jitter the trainer saw.
pub fn render_seed(seed: u64) -> u64 {
    stream_seed(seed, &[STREAM_RENDER])
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub iters: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lambda_sc: f64,
    pub grid_resolution: [usize; 3],
    pub seed: u64,
    /// Training views (indices into the dataset); None trains on all.
    pub views: Option<Vec<usize>>,
    /// Field bounds; None derives them from the dataset metadata, padded by
    /// [`BBOX_PAD_FRACTION`] of the diagonal. Explicit bounds are not padded.
    pub bbox: Option<Aabb>,
    /// Expected background counts per bin; None uses the dataset's noise
    /// parameters.
    pub background: Option<f64>,
    /// March step in meters; None uses the largest step the time axis allows.
    pub step_size: Option<f64>,
    /// Inverse-square clamp; None uses 1% of the bounds diagonal.
    pub min_distance: Option<f64>,
    /// Pixel footprint; None inherits the dataset's values.
    pub footprint_sigma: Option<f64>,
    pub footprint_samples: Option<usize>,
    /// Extra checkpoints every this many iterations (0 = final only).
    pub checkpoint_every: usize,
    /// Metrics cadence in iterations; the final iteration always logs.
    pub log_every: usize,
}

impl TrainConfig {
    pub fn new(iters: usize) -> Self {
        TrainConfig {
            iters,
            batch_size: 512,
            lr: 1e-3,
            lambda_sc: crate::loss::LAMBDA_SC_SIMULATED,
            grid_resolution: [64, 64, 64],
            seed: 0,
            views: None,
            bbox: None,
            background: None,
            step_size: None,
            min_distance: None,
            footprint_sigma: None,
            footprint_samples: None,
            checkpoint_every: 0,
            log_every: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(invalid("need at least one iteration"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.lambda_sc >= 0.0 && self.lambda_sc.is_finite()) {
            return Err(invalid(format!("lambda_sc must be >= 0, got {}", self.lambda_sc)));
        }
        if self.grid_resolution.iter().any(|&r| r < 2) {
            return Err(invalid("grid resolution must be at least 2 nodes per axis"));
        }
        Ok(())
    }
}

/// Provenance written next to the checkpoints; render and eval consume the
/// normalization constant from here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMeta {
    pub format_version: u32,
    /// Global max raw count used to normalize measurements.
    pub normalization: f64,
    /// Background level (counts per bin per channel) used for carving masks.
    pub background: f64,
    pub lambda_sc: f64,
    pub lr: f64,
    pub iters: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub views: Vec<usize>,
    pub grid_resolution: [usize; 3],
    pub channels: usize,
    pub bbox: [[f64; 3]; 2],
    pub footprint_sigma: f64,
    pub footprint_samples: usize,
    pub step_size: f64,
    pub min_distance: f64,
}

impl TrainMeta {
    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(TRAIN_META_FILE))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("train meta parse error: {e}")))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| invalid(format!("train meta serialize error: {e}")))?;
        std::fs::write(dir.join(TRAIN_META_FILE), text)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct MetricsRecord {
    iteration: usize,
    loss_tau: f64,
    loss_sc: f64,
    loss: f64,
    lr: f64,
    elapsed_s: f64,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub field: VoxelField,
    pub normalization: f64,
    pub background: f64,
    pub final_loss_tau: f64,
    pub final_loss_sc: f64,
    pub checkpoint_path: PathBuf,
}

/// Everything fixed for the duration of training.
struct TrainContext {
    cameras: Vec<CameraModel>,
    noisy: Vec<TransientImage>,
    /// Per view: `height * width * n_bins` emptiness flags, pixel-major.
    masks: Vec<Vec<bool>>,
    normalization: f64,
    lambda_sc: f64,
    render: RenderConfig,
    width: usize,
    height: usize,
    n_bins: usize,
}

impl TrainContext {
    fn pixels_per_view(&self) -> usize {
        self.width * self.height
    }

    /// Forward + backward for one pixel id, accumulating into `grads`.
    /// Returns (loss_tau, carve_value).
    fn pixel_pass(
        &self,
        field: &VoxelField,
        id: u32,
        grads: &mut ParamGradients,
    ) -> Result<(f64, f64)> {
        let ppv = self.pixels_per_view();
        let view = id as usize / ppv;
        let pixel = id as usize % ppv;
        let (row, col) = (pixel / self.width, pixel % self.width);
        let coords = [col as f64 + 0.5, row as f64 + 0.5];

        let fwd = render_pixel_forward(field, &self.cameras[view], coords, &self.render)?;
        let counts = self.noisy[view].pixel(row, col);
        let measured: Vec<f64> =
            counts.iter().map(|&c| c as f64 / self.normalization).collect();
        let mut adjoint = vec![0.0f64; measured.len()];
        let lt = loss_tau(&measured, &fwd.tau_f, &mut adjoint)?;
        let mask = &self.masks[view][pixel * self.n_bins..(pixel + 1) * self.n_bins];
        let carve_value = pixel_backward(
            field,
            &fwd,
            &self.render,
            &adjoint,
            Some(CarveSpec { mask, coeff: self.lambda_sc }),
            grads,
        )?;
        Ok((lt, carve_value))
    }
}

/// One batch over fixed slot chunks; deterministic for any thread count.
/// Returns mean (loss_tau, loss_sc) with `grads` holding the mean gradient.
fn batch_pass(
    ctx: &TrainContext,
    field: &VoxelField,
    batch: &[u32],
    slots: &mut [ParamGradients],
    grads: &mut ParamGradients,
) -> Result<(f64, f64)> {
    let chunk_size = batch.len().div_ceil(NUM_ACCUM_SLOTS);
    let chunks: Vec<&[u32]> = batch.chunks(chunk_size).collect();
    let losses: Vec<Result<(f64, f64)>> = slots[..chunks.len()]
        .par_iter_mut()
        .zip(&chunks)
        .map(|(slot, chunk)| {
            slot.clear();
            let mut lt = 0.0f64;
            let mut lsc = 0.0f64;
            for &id in *chunk {
                let (a, b) = ctx.pixel_pass(field, id, slot)?;
                lt += a;
                lsc += b;
            }
            Ok((lt, lsc))
        })
        .collect();

    grads.clear();
    let mut lt_sum = 0.0f64;
    let mut lsc_sum = 0.0f64;
    for (slot, result) in slots[..chunks.len()].iter().zip(losses) {
        let (lt, lsc) = result?;
        lt_sum += lt;
        lsc_sum += lsc;
        grads.add_assign(slot);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok((lt_sum * inv, lsc_sum * inv))
}

fn fisher_yates(ids: &mut [u32], rng: &mut SplitMix64) {
    for i in (1..ids.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        ids.swap(i, j);
    }
}

/// Trains a voxel field against a dataset directory and writes checkpoints,
/// metrics, and provenance into `out_dir`.
pub fn train(data_dir: &Path, out_dir: &Path, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    let meta = DatasetMeta::read(data_dir)?;
    let views: Vec<usize> = match &config.views {
        Some(v) if v.is_empty() => return Err(invalid("view list must not be empty")),
        Some(v) => v.clone(),
        None => (0..meta.n_views()).collect(),
    };
    let mut cameras = Vec::with_capacity(views.len());
    let mut noisy = Vec::with_capacity(views.len());
    for &v in &views {
        cameras.push(CameraModel::new(meta.camera.clone(), meta.pose(v)?)?);
        let img = load_noisy_view(data_dir, v)?;
        if img.height() != meta.height
            || img.width() != meta.width
            || img.n_bins() != meta.time_axis.n_bins()
            || img.channels() != meta.channels
        {
            return Err(invalid(format!("view {v} shape disagrees with metadata")));
        }
        noisy.push(img);
    }

    let normalization = noisy.iter().map(|img| img.max_value() as f64).fold(0.0, f64::max);
    if normalization <= 0.0 {
        return Err(invalid("training views contain no photons"));
    }
    let background = config.background.unwrap_or_else(|| meta.noise.background_per_bin());

    let n_bins = meta.time_axis.n_bins();
    let masks: Vec<Vec<bool>> = noisy
        .iter()
        .map(|img| {
            let mut m = Vec::with_capacity(img.height() * img.width() * n_bins);
            for row in 0..img.height() {
                for col in 0..img.width() {
                    m.extend(carving_mask(img.pixel(row, col), n_bins, meta.channels, background));
                }
            }
            m
        })
        .collect();

    let bbox = match config.bbox {
        Some(b) => b,
        None => {
            let raw = meta.scene_aabb.ok_or_else(|| {
                invalid("dataset metadata has no scene bounds; pass explicit bounds")
            })?;
            let b = Aabb {
                min: transient_core::Vec3::from_array(raw[0]),
                max: transient_core::Vec3::from_array(raw[1]),
            };
            b.expanded(BBOX_PAD_FRACTION * b.diagonal())
        }
    };
    if !bbox.is_valid() {
        return Err(invalid("field bounds are degenerate"));
    }

    let render = RenderConfig {
        time_axis: meta.time_axis.clone(),
        impulse: meta.impulse.clone(),
        t_near: 0.0,
        t_far: 1e9,
        step_size: config.step_size.unwrap_or_else(|| RenderConfig::max_step(&meta.time_axis)),
        min_distance: config
            .min_distance
            .unwrap_or_else(|| RenderConfig::default_min_distance(&bbox)),
        footprint_sigma: config.footprint_sigma.unwrap_or(meta.footprint_sigma),
        footprint_samples: config.footprint_samples.unwrap_or(meta.footprint_samples),
        seed: render_seed(config.seed),
    };
    render.validate()?;

    let ctx = TrainContext {
        cameras,
        noisy,
        masks,
        normalization,
        lambda_sc: config.lambda_sc,
        render,
        width: meta.width,
        height: meta.height,
        n_bins,
    };

    let mut field = VoxelField::init(bbox, config.grid_resolution, meta.channels)?;
    let mut opt = OptimizerState::new(&field);
    let mut grads = ParamGradients::zeros_like(&field);
    let mut slots: Vec<ParamGradients> =
        (0..NUM_ACCUM_SLOTS).map(|_| ParamGradients::zeros_like(&field)).collect();

    std::fs::create_dir_all(out_dir)?;
    let mut metrics = std::io::BufWriter::new(std::fs::File::create(out_dir.join(METRICS_FILE))?);

    let total_ids = views.len() * ctx.pixels_per_view();
    let mut order: Vec<u32> = (0..total_ids as u32).collect();
    let mut epoch = 0u64;
    let mut rng = SplitMix64::new(stream_seed(config.seed, &[STREAM_EPOCH, epoch]));
    fisher_yates(&mut order, &mut rng);
    let mut cursor = 0usize;

    let started = Instant::now();
    let mut last_lt = 0.0f64;
    let mut last_lsc = 0.0f64;
    for iter in 0..config.iters {
        if cursor >= order.len() {
            epoch += 1;
            let mut rng = SplitMix64::new(stream_seed(config.seed, &[STREAM_EPOCH, epoch]));
            fisher_yates(&mut order, &mut rng);
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(order.len());
        let batch: Vec<u32> = order[cursor..end].to_vec();
        cursor = end;

        let (lt, lsc) = batch_pass(&ctx, &field, &batch, &mut slots, &mut grads)?;
        let total = lt + config.lambda_sc * lsc;
        if !total.is_finite() || grads.ensure_finite().is_err() {
            write_checkpoint(&field, &out_dir.join(DIVERGED_CHECKPOINT_FILE))?;
            return Err(invalid(format!(
                "loss diverged at iteration {iter} (loss_tau {lt}, loss_sc {lsc}); \
                 state saved to {DIVERGED_CHECKPOINT_FILE}"
            )));
        }
        last_lt = lt;
        last_lsc = lsc;

        let lr = learning_rate_at(config.lr, config.iters, iter);
        opt.step(&mut field, &grads, lr)?;

        if iter % config.log_every.max(1) == 0 || iter + 1 == config.iters {
            let record = MetricsRecord {
                iteration: iter,
                loss_tau: lt,
                loss_sc: lsc,
                loss: total,
                lr,
                elapsed_s: started.elapsed().as_secs_f64(),
            };
            let line = serde_json::to_string(&record)
                .map_err(|e| invalid(format!("metrics serialize error: {e}")))?;
            writeln!(metrics, "{line}")?;
        }
        if config.checkpoint_every > 0
            && (iter + 1) % config.checkpoint_every == 0
            && iter + 1 != config.iters
        {
            write_checkpoint(&field, &out_dir.join(format!("checkpoint_{:06}.tnrf", iter + 1)))?;
        }
    }
    metrics.flush()?;

    let checkpoint_path = out_dir.join(FINAL_CHECKPOINT_FILE);
    write_checkpoint(&field, &checkpoint_path)?;
    let train_meta = TrainMeta {
        format_version: 1,
        normalization,
        background,
        lambda_sc: config.lambda_sc,
        lr: config.lr,
        iters: config.iters,
        batch_size: config.batch_size,
        seed: config.seed,
        views,
        grid_resolution: config.grid_resolution,
        channels: meta.channels,
        bbox: [bbox.min.to_array(), bbox.max.to_array()],
        footprint_sigma: ctx.render.footprint_sigma,
        footprint_samples: ctx.render.footprint_samples,
        step_size: ctx.render.step_size,
        min_distance: ctx.render.min_distance,
    };
    train_meta.write(out_dir)?;

    Ok(TrainOutput {
        field,
        normalization,
        background,
        final_loss_tau: last_lt,
        final_loss_sc: last_lsc,
        checkpoint_path,
    })
}
