//! Temporal impulse response of the illumination/detection chain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Discrete impulse response sampled at the histogram bin width.
///
/// `zero_index` marks the tap that corresponds to zero delay, so a kernel can
/// extend both before and after its nominal peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    kernel: Vec<f64>,
    zero_index: usize,
}

impl ImpulseResponse {
    pub fn new(kernel: Vec<f64>, zero_index: usize) -> Result<Self> {
        if kernel.is_empty() {
            return Err(invalid("impulse kernel must have at least one tap"));
        }
        if zero_index >= kernel.len() {
            return Err(invalid(format!(
                "zero index {zero_index} outside kernel of length {}",
                kernel.len()
            )));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(invalid("impulse kernel contains non-finite taps"));
        }
        Ok(ImpulseResponse { kernel, zero_index })
    }

    /// Unit delta: convolving with it is the identity.
    pub fn delta() -> Self {
        ImpulseResponse { kernel: vec![1.0], zero_index: 0 }
    }

    /// Truncated Gaussian pulse with the given standard deviation in bins.
    ///
    /// The kernel spans +/- 4 sigma around its center tap and is normalized to
    /// unit area. `sigma_bins = 0` degenerates to a delta.
    pub fn gaussian(sigma_bins: f64) -> Result<Self> {
        if !(sigma_bins.is_finite() && sigma_bins >= 0.0) {
            return Err(invalid(format!("sigma must be >= 0, got {sigma_bins}")));
        }
        if sigma_bins == 0.0 {
            return Ok(Self::delta());
        }
        let half = (4.0 * sigma_bins).ceil() as usize;
        let mut kernel = Vec::with_capacity(2 * half + 1);
        for i in 0..=2 * half {
            let d = i as f64 - half as f64;
            kernel.push((-0.5 * (d / sigma_bins).powi(2)).exp());
        }
        let sum: f64 = kernel.iter().sum();
        for v in &mut kernel {
            *v /= sum;
        }
        Ok(ImpulseResponse { kernel, zero_index: half })
    }

    /// Gaussian pulse specified by full width at half maximum in bins.
    pub fn gaussian_fwhm(fwhm_bins: f64) -> Result<Self> {
        // FWHM = 2 sqrt(2 ln 2) sigma.
        const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
        Self::gaussian(fwhm_bins / FWHM_PER_SIGMA)
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sum(&self) -> f64 {
        self.kernel.iter().sum()
    }
}
