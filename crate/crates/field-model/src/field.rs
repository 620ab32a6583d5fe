//! Voxel grid storage, activations, and trilinear queries.

use transient_core::error::{invalid, Result};
use transient_core::{Aabb, Vec3};

use crate::grads::ParamGradients;

/// Preactivations are clamped to this range before activation, which bounds
/// the activated values and keeps the exponentials well behaved. Gradients
/// pass through values inside the range and are zero outside it.
pub const PREACTIVATION_MIN: f64 = -15.0;
pub const PREACTIVATION_MAX: f64 = 8.0;

/// Density initialization: activated sigma starts at 0.1 per scene unit.
pub const DEFAULT_SIGMA_DENSITY: f64 = 0.1;
/// Radiance preactivation initialization.
pub const DEFAULT_RADIANCE_PRE: f64 = -3.0;

/// Radiance is monochrome or RGB; storage always reserves three slots.
pub const MAX_CHANNELS: usize = 3;

/// Density activation: sigma = exp(clamp(pre)).
pub fn density_from_pre(pre: f64) -> f64 {
    pre.clamp(PREACTIVATION_MIN, PREACTIVATION_MAX).exp()
}

/// Radiance activation: c = exp(exp(clamp(pre))) - 1, zero at -infinity.
pub fn radiance_from_pre(pre: f64) -> f64 {
    pre.clamp(PREACTIVATION_MIN, PREACTIVATION_MAX).exp().exp() - 1.0
}

/// Activated field values at a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// Volume density per scene unit.
    pub sigma: f64,
    /// Per-channel emitted radiance; unused channels stay zero.
    pub radiance: [f64; MAX_CHANNELS],
}

impl FieldSample {
    pub const EMPTY: FieldSample = FieldSample { sigma: 0.0, radiance: [0.0; MAX_CHANNELS] };
}

/// Dense voxel field over an axis-aligned bounding box.
///
/// `resolution` counts grid nodes per axis, so a (2,2,2) field has exactly
/// the eight corner parameters. Parameters are stored in f64 for stable
/// gradient accumulation and serialized as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelField {
    bbox: Aabb,
    resolution: [usize; 3],
    channels: usize,
    sigma_pre: Vec<f64>,
    radiance_pre: Vec<f64>,
}

impl VoxelField {
    /// Creates a field with the default almost-empty initialization.
    pub fn init(bbox: Aabb, resolution: [usize; 3], channels: usize) -> Result<Self> {
        Self::validate_shape(&bbox, resolution, channels)?;
        let nodes = resolution[0] * resolution[1] * resolution[2];
        Ok(VoxelField {
            bbox,
            resolution,
            channels,
            sigma_pre: vec![DEFAULT_SIGMA_DENSITY.ln(); nodes],
            radiance_pre: vec![DEFAULT_RADIANCE_PRE; nodes * channels],
        })
    }

    pub fn from_parts(
        bbox: Aabb,
        resolution: [usize; 3],
        channels: usize,
        sigma_pre: Vec<f64>,
        radiance_pre: Vec<f64>,
    ) -> Result<Self> {
        Self::validate_shape(&bbox, resolution, channels)?;
        let nodes = resolution[0] * resolution[1] * resolution[2];
        if sigma_pre.len() != nodes {
            return Err(invalid(format!(
                "sigma grid has {} values, expected {nodes}",
                sigma_pre.len()
            )));
        }
        if radiance_pre.len() != nodes * channels {
            return Err(invalid(format!(
                "radiance grid has {} values, expected {}",
                radiance_pre.len(),
                nodes * channels
            )));
        }
        if sigma_pre.iter().chain(radiance_pre.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("field preactivations must be finite"));
        }
        Ok(VoxelField { bbox, resolution, channels, sigma_pre, radiance_pre })
    }

    fn validate_shape(bbox: &Aabb, resolution: [usize; 3], channels: usize) -> Result<()> {
        if !bbox.is_valid() {
            return Err(invalid("field bbox must have positive extent on every axis"));
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(invalid(format!("resolution {resolution:?} needs >= 2 nodes per axis")));
        }
        if channels != 1 && channels != 3 {
            return Err(invalid(format!("radiance must have 1 or 3 channels, got {channels}")));
        }
        Ok(())
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn node_count(&self) -> usize {
        self.sigma_pre.len()
    }

    pub fn sigma_pre(&self) -> &[f64] {
        &self.sigma_pre
    }

    pub fn sigma_pre_mut(&mut self) -> &mut [f64] {
        &mut self.sigma_pre
    }

    pub fn radiance_pre(&self) -> &[f64] {
        &self.radiance_pre
    }

    pub fn radiance_pre_mut(&mut self) -> &mut [f64] {
        &mut self.radiance_pre
    }

    pub fn node_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.resolution[1] + iy) * self.resolution[2] + iz
    }

    /// World position of a grid node.
    pub fn node_position(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        let e = self.bbox.max - self.bbox.min;
        Vec3::new(
            self.bbox.min.x + e.x * ix as f64 / (self.resolution[0] - 1) as f64,
            self.bbox.min.y + e.y * iy as f64 / (self.resolution[1] - 1) as f64,
            self.bbox.min.z + e.z * iz as f64 / (self.resolution[2] - 1) as f64,
        )
    }

    /// Cell base index and trilinear weights for a point inside the bbox.
    fn cell(&self, p: Vec3) -> ([usize; 3], [f64; 3]) {
        let e = self.bbox.max - self.bbox.min;
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        let coords = [
            (p.x - self.bbox.min.x) / e.x * (self.resolution[0] - 1) as f64,
            (p.y - self.bbox.min.y) / e.y * (self.resolution[1] - 1) as f64,
            (p.z - self.bbox.min.z) / e.z * (self.resolution[2] - 1) as f64,
        ];
        for axis in 0..3 {
            let max_cell = self.resolution[axis] - 2;
            let c = coords[axis].floor().clamp(0.0, max_cell as f64);
            idx[axis] = c as usize;
            frac[axis] = (coords[axis] - c).clamp(0.0, 1.0);
        }
        (idx, frac)
    }

    /// Eight cell corner indices and weights; weights sum to 1.
    fn corners(&self, p: Vec3) -> [(usize, f64); 8] {
        let ([ix, iy, iz], [fx, fy, fz]) = self.cell(p);
        let gx = [1.0 - fx, fx];
        let gy = [1.0 - fy, fy];
        let gz = [1.0 - fz, fz];
        let mut out = [(0usize, 0.0f64); 8];
        let mut k = 0;
        for dx in 0..2 {
            for dy in 0..2 {
                for dz in 0..2 {
                    out[k] = (
                        self.node_index(ix + dx, iy + dy, iz + dz),
                        gx[dx] * gy[dy] * gz[dz],
                    );
                    k += 1;
                }
            }
        }
        out
    }

    /// Activated density and radiance at a world point.
    ///
    /// Points outside the bbox are empty space: zero density, zero radiance.
    pub fn query(&self, p: Vec3) -> FieldSample {
        if !self.bbox.contains(p) {
            return FieldSample::EMPTY;
        }
        let corners = self.corners(p);
        let mut sigma_pre = 0.0;
        for &(idx, w) in &corners {
            sigma_pre += w * self.sigma_pre[idx];
        }
        let mut radiance = [0.0; MAX_CHANNELS];
        for c in 0..self.channels {
            let mut pre = 0.0;
            for &(idx, w) in &corners {
                pre += w * self.radiance_pre[idx * self.channels + c];
            }
            radiance[c] = radiance_from_pre(pre);
        }
        FieldSample { sigma: density_from_pre(sigma_pre), radiance }
    }

    /// Reverse-mode companion of [`query`](Self::query).
    ///
    /// Accumulates d(loss)/d(preactivation) into `grads` given the adjoints
    /// of the activated sigma and radiance at `p`. Outside the bbox nothing
    /// is accumulated, matching the forward zero.
    pub fn query_backward(
        &self,
        p: Vec3,
        d_sigma: f64,
        d_radiance: &[f64; MAX_CHANNELS],
        grads: &mut ParamGradients,
    ) {
        if !self.bbox.contains(p) {
            return;
        }
        let corners = self.corners(p);

        let mut sigma_pre = 0.0;
        for &(idx, w) in &corners {
            sigma_pre += w * self.sigma_pre[idx];
        }
        if d_sigma != 0.0 && (PREACTIVATION_MIN..=PREACTIVATION_MAX).contains(&sigma_pre) {
            // d sigma / d pre = exp(pre) = sigma.
            let factor = d_sigma * sigma_pre.exp();
            for &(idx, w) in &corners {
                grads.sigma[idx] += factor * w;
            }
        }

        for c in 0..self.channels {
            let adj = d_radiance[c];
            if adj == 0.0 {
                continue;
            }
            let mut pre = 0.0;
            for &(idx, w) in &corners {
                pre += w * self.radiance_pre[idx * self.channels + c];
            }
            if (PREACTIVATION_MIN..=PREACTIVATION_MAX).contains(&pre) {
                // d radiance / d pre = exp(pre) * exp(exp(pre)).
                let inner = pre.exp();
                let factor = adj * inner * inner.exp();
                for &(idx, w) in &corners {
                    grads.radiance[idx * self.channels + c] += factor * w;
                }
            }
        }
    }
}
