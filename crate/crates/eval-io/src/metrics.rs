//! Image-quality metrics: gamma-corrected PSNR and masked depth L1.

use serde::{Deserialize, Serialize};
use std::path::Path;
use transient_core::error::{invalid, Result};

/// Display gamma applied to normalized intensities before comparison.
pub const GAMMA_EXPONENT: f64 = 1.0 / 2.2;

/// PSNR outcome; `db` is `None` exactly when the images match bit-for-bit
/// after preprocessing (infinite PSNR).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Psnr {
    pub db: Option<f64>,
    pub infinite: bool,
}

/// PSNR between two intensity images sharing one normalization peak.
///
/// Both images are divided by `peak`, clipped below at zero, and
/// gamma-corrected with exponent [`GAMMA_EXPONENT`]; the result is
/// `-10 log10(MSE)` against a unit signal peak.
pub fn intensity_psnr(rendered: &[f32], reference: &[f32], peak: f64) -> Result<Psnr> {
    if rendered.len() != reference.len() {
        return Err(invalid(format!(
            "intensity shape mismatch: {} vs {}",
            rendered.len(),
            reference.len()
        )));
    }
    if rendered.is_empty() {
        return Err(invalid("intensity images are empty"));
    }
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(invalid(format!("peak must be positive, got {peak}")));
    }
    let gamma = |v: f32| (f64::from(v).max(0.0) / peak).powf(GAMMA_EXPONENT);
    let mut sum_sq = 0.0f64;
    for (&r, &t) in rendered.iter().zip(reference) {
        let d = gamma(r) - gamma(t);
        sum_sq += d * d;
    }
    let mse = sum_sq / rendered.len() as f64;
    if mse == 0.0 {
        return Ok(Psnr { db: None, infinite: true });
    }
    Ok(Psnr { db: Some(-10.0 * mse.log10()), infinite: false })
}

/// Masked mean absolute depth difference; negative depths are invalid
/// sentinels and excluded on either side.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DepthL1 {
    pub mean_abs: f64,
    pub valid_pixels: usize,
    pub invalid_rendered: usize,
    pub invalid_reference: usize,
}

pub fn depth_l1(rendered: &[f32], reference: &[f32]) -> Result<DepthL1> {
    if rendered.len() != reference.len() {
        return Err(invalid(format!(
            "depth shape mismatch: {} vs {}",
            rendered.len(),
            reference.len()
        )));
    }
    let mut sum = 0.0f64;
    let mut valid = 0usize;
    let mut bad_r = 0usize;
    let mut bad_t = 0usize;
    for (&r, &t) in rendered.iter().zip(reference) {
        let r_ok = r >= 0.0;
        let t_ok = t >= 0.0;
        if !r_ok {
            bad_r += 1;
        }
        if !t_ok {
            bad_t += 1;
        }
        if r_ok && t_ok {
            sum += (f64::from(r) - f64::from(t)).abs();
            valid += 1;
        }
    }
    if valid == 0 {
        return Err(invalid("no pixels with valid depth in both maps"));
    }
    Ok(DepthL1 {
        mean_abs: sum / valid as f64,
        valid_pixels: valid,
        invalid_rendered: bad_r,
        invalid_reference: bad_t,
    })
}

/// Metrics for one evaluated view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewMetrics {
    pub view: usize,
    pub psnr_db: Option<f64>,
    pub psnr_infinite: bool,
    pub peak: f64,
    pub depth_l1: f64,
    pub valid_depth_pixels: usize,
    pub invalid_rendered_depth: usize,
    pub invalid_reference_depth: usize,
}

/// Full evaluation report; means are the arithmetic mean of the per-view
/// entries (an infinite view PSNR makes the mean infinite).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pred_dir: String,
    pub ref_dir: String,
    /// Factor applied to reference rates to express them in model units.
    pub reference_scale: f64,
    pub gamma_exponent: f64,
    pub views: Vec<ViewMetrics>,
    pub mean_psnr_db: Option<f64>,
    pub mean_psnr_infinite: bool,
    pub mean_depth_l1: f64,
}

impl MetricsReport {
    pub fn from_views(
        pred_dir: String,
        ref_dir: String,
        reference_scale: f64,
        views: Vec<ViewMetrics>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(invalid("no views evaluated"));
        }
        let n = views.len() as f64;
        let infinite = views.iter().any(|v| v.psnr_infinite);
        let mean_psnr = if infinite {
            None
        } else {
            Some(views.iter().map(|v| v.psnr_db.unwrap_or(0.0)).sum::<f64>() / n)
        };
        let mean_depth = views.iter().map(|v| v.depth_l1).sum::<f64>() / n;
        Ok(MetricsReport {
            pred_dir,
            ref_dir,
            reference_scale,
            gamma_exponent: GAMMA_EXPONENT,
            views,
            mean_psnr_db: mean_psnr,
            mean_psnr_infinite: infinite,
            mean_depth_l1: mean_depth,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| invalid(format!("report serialize error: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("report parse error: {e}")))
    }
}
