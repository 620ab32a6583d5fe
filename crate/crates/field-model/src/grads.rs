//! Gradient buffers matching a [`VoxelField`](crate::VoxelField)'s parameters.

use transient_core::error::{invalid, Result};

use crate::field::VoxelField;

/// Per-parameter loss gradients, same shapes as the field's grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub sigma: Vec<f64>,
    pub radiance: Vec<f64>,
}

impl ParamGradients {
    pub fn zeros_like(field: &VoxelField) -> Self {
        ParamGradients {
            sigma: vec![0.0; field.sigma_pre().len()],
            radiance: vec![0.0; field.radiance_pre().len()],
        }
    }

    pub fn clear(&mut self) {
        self.sigma.fill(0.0);
        self.radiance.fill(0.0);
    }

    /// Elementwise accumulate, used for the ordered batch reduction.
    pub fn add_assign(&mut self, other: &ParamGradients) {
        debug_assert_eq!(self.sigma.len(), other.sigma.len());
        debug_assert_eq!(self.radiance.len(), other.radiance.len());
        for (a, b) in self.sigma.iter_mut().zip(&other.sigma) {
            *a += b;
        }
        for (a, b) in self.radiance.iter_mut().zip(&other.radiance) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.sigma.iter_mut().chain(self.radiance.iter_mut()) {
            *g *= factor;
        }
    }

    /// NaN or Inf anywhere in a gradient pass is a hard error.
    pub fn ensure_finite(&self) -> Result<()> {
        if let Some(i) = self.sigma.iter().position(|g| !g.is_finite()) {
            return Err(invalid(format!("non-finite density gradient at node {i}")));
        }
        if let Some(i) = self.radiance.iter().position(|g| !g.is_finite()) {
            return Err(invalid(format!("non-finite radiance gradient at entry {i}")));
        }
        Ok(())
    }
}
