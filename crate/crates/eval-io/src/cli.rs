//! Command-line surface of the `tnrf` binary.
//!
//! Each subcommand is a thin shim over the library crates: argument structs
//! collect and validate flags, and `run` dispatches to the simulator, the
//! trainer, the renderer, or the evaluation helpers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lidar_sim::dataset::{circle_poses, generate_dataset, DatasetRequest};
use lidar_sim::scene::AnalyticScene;
use lidar_sim::sim::SimConfig;
use transient_core::camera::Intrinsics;
use transient_core::error::{invalid, Result};
use transient_core::impulse::ImpulseResponse;
use transient_core::noise::LidarNoiseParams;
use transient_core::time::TimeAxis;
use transient_core::vec3::Aabb;
use training::{train, TrainConfig};

use crate::evalrun::{evaluate, render_outputs};
use crate::inspect::inspect;

const PICOSECOND: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(
    name = "tnrf",
    version,
    about = "Time-resolved neural radiance fields from single-photon lidar histograms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a multiview photon-count dataset from an analytic scene.
    Simulate(SimulateArgs),
    /// Fit a voxel field to the histograms of a dataset bundle.
    Train(TrainArgs),
    /// Render transients, intensity, and depth from a trained field.
    Render(RenderArgs),
    /// Compare rendered views against the clean references of a dataset.
    Eval(EvalArgs),
    /// Summarize the contents of a dataset bundle.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    /// Output directory for the dataset bundle.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of camera poses on the orbit.
    #[arg(long, default_value_t = 5)]
    pub views: usize,
    /// Orbit radius in meters.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    /// Camera elevation above the horizontal plane, degrees.
    #[arg(long, default_value_t = 30.0)]
    pub elevation: f64,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Horizontal field of view, degrees.
    #[arg(long, default_value_t = 40.0)]
    pub fov: f64,
    /// Number of histogram bins per pixel.
    #[arg(long, default_value_t = 1500)]
    pub bins: usize,
    /// Histogram bin width, picoseconds.
    #[arg(long = "bin-ps", default_value_t = 8.0)]
    pub bin_ps: f64,
    /// Laser pulse full width at half maximum, picoseconds.
    #[arg(long = "pulse-fwhm-ps", default_value_t = 70.0)]
    pub pulse_fwhm_ps: f64,
    /// Histogram start time, picoseconds. Defaults to a window derived from
    /// the scene bounds and the camera orbit.
    #[arg(long = "t-offset-ps")]
    pub t_offset_ps: Option<f64>,
    /// Mean signal photons per occupied pixel after flux calibration; zero
    /// keeps the raw flux.
    #[arg(long = "counts-target", default_value_t = 2850.0)]
    pub counts_target: f64,
    /// Expected background counts per bin (ambient plus dark).
    #[arg(long = "bg-per-bin", default_value_t = 0.001)]
    pub bg_per_bin: f64,
    /// Laser pulses fired per pixel.
    #[arg(long, default_value_t = 100_000)]
    pub pulses: u64,
    /// Detection efficiency of the sensor, in (0, 1].
    #[arg(long, default_value_t = 0.25)]
    pub efficiency: f64,
    /// Gaussian radius of the pixel footprint in pixels; zero uses one
    /// central ray per pixel.
    #[arg(long = "footprint-sigma", default_value_t = 0.0)]
    pub footprint_sigma: f64,
    #[arg(long = "footprint-samples", default_value_t = 1)]
    pub footprint_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset bundle produced by `tnrf simulate`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for checkpoints and logs.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated view indices to train on (default: all views).
    #[arg(long)]
    pub views: Option<String>,
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
    /// Rays per optimization step.
    #[arg(long, default_value_t = 512)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Weight of the space-carving term.
    #[arg(long = "lambda-sc", default_value_t = 1e-3)]
    pub lambda_sc: f64,
    /// Grid nodes per axis: a single count like "64" or "NXxNYxNZ".
    #[arg(long, default_value = "64")]
    pub grid: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write an intermediate checkpoint every N iterations (0 disables).
    #[arg(long = "checkpoint-every", default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Append a metrics record every N iterations.
    #[arg(long = "log-every", default_value_t = 1)]
    pub log_every: usize,
    /// Override the background rate per bin used for carving masks.
    #[arg(long)]
    pub background: Option<f64>,
    /// Override the ray-march step in meters.
    #[arg(long = "step-size")]
    pub step_size: Option<f64>,
    /// Override the near-field clamp on the inverse-square falloff, meters.
    #[arg(long = "min-distance")]
    pub min_distance: Option<f64>,
    /// Override the training pixel footprint radius in pixels.
    #[arg(long = "footprint-sigma")]
    pub footprint_sigma: Option<f64>,
    #[arg(long = "footprint-samples")]
    pub footprint_samples: Option<usize>,
    /// Field bounds as "x0,y0,z0,x1,y1,z1" (default: padded scene bounds
    /// recorded in the dataset).
    #[arg(long)]
    pub bbox: Option<String>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Training output directory holding the final checkpoint.
    #[arg(long)]
    pub train: PathBuf,
    /// Dataset bundle supplying cameras and the time axis.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for rendered views.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated view indices to render (default: all views).
    #[arg(long)]
    pub views: Option<String>,
    /// Additionally write grayscale PGM previews of intensity and depth.
    #[arg(long, default_value_t = false)]
    pub previews: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory produced by `tnrf render`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Dataset bundle with the clean reference transients.
    #[arg(long = "ref")]
    pub ref_dir: PathBuf,
    /// Optional path for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Dataset bundle to summarize.
    #[arg(long)]
    pub data: PathBuf,
    /// Optional path for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses a comma-separated list of view indices.
fn parse_view_list(text: &str) -> Result<Vec<usize>> {
    let mut views = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(invalid(format!("empty entry in view list {text:?}")));
        }
        let index: usize = part
            .parse()
            .map_err(|_| invalid(format!("bad view index {part:?} in {text:?}")))?;
        views.push(index);
    }
    Ok(views)
}

/// Parses "64" or "64x48x32" into grid node counts per axis.
fn parse_grid(text: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = text.split('x').collect();
    let parse = |part: &str| -> Result<usize> {
        part.trim()
            .parse()
            .map_err(|_| invalid(format!("bad grid size {part:?} in {text:?}")))
    };
    match parts.as_slice() {
        [one] => {
            let n = parse(one)?;
            Ok([n, n, n])
        }
        [nx, ny, nz] => Ok([parse(nx)?, parse(ny)?, parse(nz)?]),
        _ => Err(invalid(format!(
            "grid must be one count or NXxNYxNZ, got {text:?}"
        ))),
    }
}

/// Parses "x0,y0,z0,x1,y1,z1" into an axis-aligned box.
fn parse_bbox(text: &str) -> Result<Aabb> {
    let mut values = [0.0f64; 6];
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 6 {
        return Err(invalid(format!(
            "bbox needs six comma-separated numbers, got {text:?}"
        )));
    }
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad bbox number {part:?} in {text:?}")))?;
    }
    let bbox = Aabb::new(
        transient_core::vec3::Vec3::new(values[0], values[1], values[2]),
        transient_core::vec3::Vec3::new(values[3], values[4], values[5]),
    );
    if !bbox.is_valid() {
        return Err(invalid(format!("bbox has empty extent: {text:?}")));
    }
    Ok(bbox)
}

/// Picks a histogram start time that places every two-way return from the
/// scene bounds inside the axis, with slack for the pulse tails.
fn derive_time_offset(
    bounds: &Aabb,
    poses: &[transient_core::camera::RigidPose],
    axis_bins: usize,
    bin_width: f64,
    impulse: &ImpulseResponse,
) -> Result<f64> {
    let mut d_min = f64::INFINITY;
    let mut d_max = 0.0f64;
    for pose in poses {
        let eye = pose.translation;
        for corner in 0..8 {
            let x = if corner & 1 == 0 { bounds.min.x } else { bounds.max.x };
            let y = if corner & 2 == 0 { bounds.min.y } else { bounds.max.y };
            let z = if corner & 4 == 0 { bounds.min.z } else { bounds.max.z };
            let d = (transient_core::vec3::Vec3::new(x, y, z) - eye).length();
            d_min = d_min.min(d);
            d_max = d_max.max(d);
        }
    }
    let c = transient_core::time::SPEED_OF_LIGHT;
    // Lead-in: the pulse mass before its peak plus a little splat slack.
    let lead_bins = impulse.zero_index() as f64 + 4.0;
    let tail_bins = (impulse.len() - impulse.zero_index()) as f64 + 4.0;
    let t_offset = (2.0 * d_min / c - lead_bins * bin_width).max(0.0);
    let t_needed = 2.0 * d_max / c + tail_bins * bin_width;
    let t_end = t_offset + axis_bins as f64 * bin_width;
    if t_end < t_needed {
        let needed_bins = ((t_needed - t_offset) / bin_width).ceil() as usize;
        return Err(invalid(format!(
            "time axis too short for the scene: {axis_bins} bins cover \
             [{t_offset:.3e}, {t_end:.3e}] s but returns extend to \
             {t_needed:.3e} s; use --bins {needed_bins} or more, or set \
             --t-offset-ps explicitly"
        )));
    }
    Ok(t_offset)
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let scene = AnalyticScene::read_json(&args.scene)?;
    if args.views == 0 {
        return Err(invalid("--views must be at least 1"));
    }
    if !(args.fov.is_finite() && args.fov > 0.0 && args.fov < 180.0) {
        return Err(invalid(format!(
            "--fov must be in (0, 180) degrees, got {}",
            args.fov
        )));
    }
    if !(args.bin_ps.is_finite() && args.bin_ps > 0.0) {
        return Err(invalid(format!("--bin-ps must be positive, got {}", args.bin_ps)));
    }
    if !(args.counts_target.is_finite() && args.counts_target >= 0.0) {
        return Err(invalid(format!(
            "--counts-target must be >= 0, got {}",
            args.counts_target
        )));
    }
    let poses = circle_poses(args.radius, args.elevation, args.views)?;
    let bin_width = args.bin_ps * PICOSECOND;
    let impulse = ImpulseResponse::gaussian_fwhm(args.pulse_fwhm_ps / args.bin_ps)?;
    let t_offset = match args.t_offset_ps {
        Some(ps) => {
            if !(ps.is_finite() && ps >= 0.0) {
                return Err(invalid(format!("--t-offset-ps must be >= 0, got {ps}")));
            }
            ps * PICOSECOND
        }
        None => {
            let bounds = scene.bounds().ok_or_else(|| {
                invalid(
                    "scene has no finite bounds; set --t-offset-ps to place \
                     the histogram window",
                )
            })?;
            derive_time_offset(&bounds, &poses, args.bins, bin_width, &impulse)?
        }
    };
    let time_axis = TimeAxis::new(args.bins, bin_width, t_offset)?;
    let half_fov = (args.fov.to_radians() / 2.0).tan();
    let fx = args.width as f64 / 2.0 / half_fov;
    let camera = Intrinsics::Pinhole {
        fx,
        fy: fx,
        cx: args.width as f64 / 2.0,
        cy: args.height as f64 / 2.0,
    };
    let noise = LidarNoiseParams::from_background(args.pulses, args.efficiency, args.bg_per_bin)?;
    let request = DatasetRequest {
        scene,
        camera,
        poses,
        width: args.width,
        height: args.height,
        config: SimConfig {
            time_axis,
            impulse,
            noise,
            footprint_sigma: args.footprint_sigma,
            footprint_samples: args.footprint_samples,
            flux_scale: 1.0,
            seed: args.seed,
        },
        counts_target: if args.counts_target > 0.0 {
            Some(args.counts_target)
        } else {
            None
        },
    };
    let (meta, stats) = generate_dataset(&request, &args.out)?;
    println!(
        "simulated {} views of {}x{} pixels, {} bins x {} channels",
        meta.n_views(),
        meta.width,
        meta.height,
        meta.time_axis.n_bins(),
        meta.channels
    );
    println!(
        "  rays hit geometry: {}/{} ({:.1}%)",
        stats.rays_hit,
        stats.rays_total,
        100.0 * stats.rays_hit as f64 / stats.rays_total.max(1) as f64
    );
    println!(
        "  flux scale {:.6e}, expected background {:.4e} counts/bin",
        meta.flux_scale,
        meta.noise.background_per_bin()
    );
    if stats.clipped_hits > 0 {
        println!(
            "  warning: {} returns overlapped the ends of the time axis",
            stats.clipped_hits
        );
    }
    println!("  wrote dataset to {}", args.out.display());
    Ok(())
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let mut config = TrainConfig::new(args.iters);
    config.batch_size = args.batch;
    config.lr = args.lr;
    config.lambda_sc = args.lambda_sc;
    config.grid_resolution = parse_grid(&args.grid)?;
    config.seed = args.seed;
    config.checkpoint_every = args.checkpoint_every;
    config.log_every = args.log_every;
    config.background = args.background;
    config.step_size = args.step_size;
    config.min_distance = args.min_distance;
    config.footprint_sigma = args.footprint_sigma;
    config.footprint_samples = args.footprint_samples;
    if let Some(views) = &args.views {
        config.views = Some(parse_view_list(views)?);
    }
    if let Some(bbox) = &args.bbox {
        config.bbox = Some(parse_bbox(bbox)?);
    }
    let output = train(&args.data, &args.out, &config)?;
    println!(
        "trained {} iterations; final loss {:.6} (transient {:.6}, carving {:.6})",
        args.iters,
        output.final_loss_tau + args.lambda_sc * output.final_loss_sc,
        output.final_loss_tau,
        output.final_loss_sc
    );
    println!(
        "  normalization {:.6e}, background {:.4e} counts/bin",
        output.normalization, output.background
    );
    println!("  checkpoint at {}", output.checkpoint_path.display());
    Ok(())
}

fn run_render(args: &RenderArgs) -> Result<()> {
    let views = match &args.views {
        Some(text) => Some(parse_view_list(text)?),
        None => None,
    };
    let meta = render_outputs(
        &args.train,
        &args.data,
        views.as_deref(),
        &args.out,
        args.previews,
    )?;
    println!(
        "rendered {} views at {}x{} into {}",
        meta.views.len(),
        meta.width,
        meta.height,
        args.out.display()
    );
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let report = evaluate(&args.pred, &args.ref_dir)?;
    for view in &report.views {
        let psnr = if view.psnr_infinite {
            "inf (exact match)".to_string()
        } else {
            format!("{:.3} dB", view.psnr_db.unwrap_or(f64::NAN))
        };
        println!(
            "view {}: intensity PSNR {}, depth L1 {:.6e} m over {} pixels",
            view.view, psnr, view.depth_l1, view.valid_depth_pixels
        );
    }
    let mean_psnr = if report.mean_psnr_infinite {
        "inf (exact match)".to_string()
    } else {
        format!("{:.3} dB", report.mean_psnr_db.unwrap_or(f64::NAN))
    };
    println!(
        "mean over {} views: intensity PSNR {}, depth L1 {:.6e} m",
        report.views.len(),
        mean_psnr,
        report.mean_depth_l1
    );
    if let Some(out) = &args.out {
        report.write(out)?;
        println!("wrote report to {}", out.display());
    }
    Ok(())
}

fn run_inspect(args: &InspectArgs) -> Result<()> {
    let report = inspect(&args.data)?;
    print!("{}", report.text());
    if let Some(out) = &args.out {
        report.write(out)?;
        println!("wrote report to {}", out.display());
    }
    Ok(())
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Train(args) => run_train(args),
        Command::Render(args) => run_render(args),
        Command::Eval(args) => run_eval(args),
        Command::Inspect(args) => run_inspect(args),
    }
}
