//! Differentiable time-resolved volume renderer.
//!
//! A dense voxel field (see `field-model`) is marched along camera rays;
//! each sample contributes its termination mass, squared transmittance for
//! the two-way light path, radiance, and inverse-square falloff to the bin
//! matching its round-trip time. The pulse shape is applied by discrete
//! convolution per pixel. A matching hand-derived reverse pass produces
//! exact gradients for every voxel, with an optional fused space-carving
//! penalty.

pub mod backward;
pub mod config;
pub mod forward;
pub mod march;

pub use backward::{pixel_backward, CarveSpec};
pub use config::RenderConfig;
pub use forward::{
    accumulate_ray_tau, depth_of, intensity_of, render_pixel_forward, render_view, PixelForward,
    RayContribution, RenderedView, DEPTH_EMPTY_THRESHOLD, DEPTH_INVALID,
};
pub use march::{march, RaySamples};
