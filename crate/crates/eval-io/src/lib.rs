//! Evaluation, inspection, and the `tnrf` command-line front end.
//!
//! This crate closes the loop around the simulator, the field model, and the
//! renderer: it writes rendered views to disk, scores them against clean
//! references (gamma-corrected intensity PSNR and log-matched-filter depth
//! error), and exposes everything as subcommands of a single binary.

pub mod cli;
pub mod evalrun;
pub mod inspect;
pub mod lmf;
pub mod metrics;
pub mod timg;

pub use evalrun::{evaluate, render_outputs, RenderMeta, RENDER_META_FILE};
pub use inspect::{inspect, InspectReport, ViewInspect};
pub use lmf::{lmf_depth, lmf_depth_map, lmf_scores, LMF_EPSILON};
pub use metrics::{
    depth_l1, intensity_psnr, DepthL1, MetricsReport, Psnr, ViewMetrics, GAMMA_EXPONENT,
};
pub use timg::{read_timg, write_pgm_preview, write_timg, ImagePlane};
