//! Dense voxel grid scene representation.
//!
//! The field stores preactivation values at grid nodes and interpolates them
//! trilinearly. Density uses a single exponential activation and radiance a
//! double exponential, which keeps both strictly positive while letting the
//! optimizer work in an unconstrained space.

mod checkpoint;
mod field;
mod grads;

pub use checkpoint::{read_checkpoint, write_checkpoint, TNRF_MAGIC, TNRF_VERSION};
pub use field::{
    density_from_pre, radiance_from_pre, FieldSample, VoxelField, DEFAULT_RADIANCE_PRE,
    DEFAULT_SIGMA_DENSITY, MAX_CHANNELS, PREACTIVATION_MAX, PREACTIVATION_MIN,
};
pub use grads::ParamGradients;
