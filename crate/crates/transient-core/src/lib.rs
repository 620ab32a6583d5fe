//! Core types and math shared by the single-photon lidar toolkit.
//!
//! Everything here is plain data plus pure functions: time axes and bin
//! splatting, impulse response kernels, camera models, pixel footprint
//! sampling, discrete time convolution, and the binary histogram format.
//! No global state, so callers can parallelize freely.

pub mod camera;
pub mod convolve;
pub mod error;
pub mod footprint;
pub mod impulse;
pub mod io;
pub mod noise;
pub mod rng;
pub mod time;
pub mod transient;
pub mod vec3;

pub use camera::{CameraModel, Intrinsics, Ray, RigidPose};
pub use convolve::{convolve_bins, convolve_channels, correlate_bins, correlate_channels};
pub use error::{CoreError, Result};
pub use footprint::{footprint_samples, FootprintSample};
pub use impulse::ImpulseResponse;
pub use noise::LidarNoiseParams;
pub use time::{splat_weights, TimeAxis, SPEED_OF_LIGHT};
pub use transient::{TransientImage, TransientKind};
pub use vec3::{Aabb, Vec3};
