//! Forward simulator for single-photon lidar: analytic scenes in, per-view
//! transient histograms out.
//!
//! The pipeline is scene -> per-pixel arrival rates (exact ray intersection,
//! inverse-square and cosine falloff, pulse convolution) -> Poisson photon
//! counts under the detector's observation model. Dataset bundles written by
//! [`dataset::generate_dataset`] are bit-reproducible for a fixed request.

pub mod dataset;
pub mod poisson;
pub mod scene;
pub mod sim;

pub use dataset::{
    circle_poses, generate_dataset, load_clean_view, load_noisy_view, DatasetMeta, DatasetRequest,
};
pub use poisson::{ln_factorial, sample_counts, sample_poisson, MAX_POISSON_MEAN};
pub use scene::{intersect, AnalyticScene, Primitive, Shape, SurfaceHit};
pub use sim::{calibrate_flux_scale, rate_transient, simulate_view, SimConfig, SimStats};
