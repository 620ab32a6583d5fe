//! Dataset bundle statistics for quick sanity checks from the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};
use training::estimate_background;
use transient_core::error::Result;
use transient_core::TransientImage;

use lidar_sim::dataset::{load_noisy_view, DatasetMeta};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewInspect {
    pub view: usize,
    pub total_counts: f64,
    pub occupied_pixels: usize,
    pub occupied_pixel_mean: f64,
    pub max_count: f32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InspectReport {
    pub scene: String,
    pub views: usize,
    pub width: usize,
    pub height: usize,
    pub n_bins: usize,
    pub channels: usize,
    pub bin_width_s: f64,
    pub t_offset_s: f64,
    pub expected_background_per_bin: f64,
    /// Estimate from the quiet leading bins; absent when no view has a
    /// quiet prefix to measure.
    pub background_estimate: Option<f64>,
    pub per_view: Vec<ViewInspect>,
    pub mean_occupied_pixel_mean: f64,
}

/// A pixel counts as occupied when its total exceeds ten times the expected
/// background total plus a five-count cushion.
fn occupied_threshold(background_per_bin: f64, n_bins: usize, channels: usize) -> f64 {
    10.0 * background_per_bin * (n_bins * channels) as f64 + 5.0
}

fn inspect_view(img: &TransientImage, view: usize, threshold: f64) -> ViewInspect {
    let mut total = 0.0f64;
    let mut occupied = 0usize;
    let mut occupied_sum = 0.0f64;
    for row in 0..img.height() {
        for col in 0..img.width() {
            let t: f64 = img.pixel_total(row, col).iter().sum();
            total += t;
            if t > threshold {
                occupied += 1;
                occupied_sum += t;
            }
        }
    }
    ViewInspect {
        view,
        total_counts: total,
        occupied_pixels: occupied,
        occupied_pixel_mean: if occupied > 0 { occupied_sum / occupied as f64 } else { 0.0 },
        max_count: img.max_value(),
    }
}

pub fn inspect(data_dir: &Path) -> Result<InspectReport> {
    let meta = DatasetMeta::read(data_dir)?;
    let views: Vec<TransientImage> = (0..meta.n_views())
        .map(|v| load_noisy_view(data_dir, v))
        .collect::<Result<_>>()?;
    let background = meta.noise.background_per_bin();
    let threshold = occupied_threshold(background, meta.time_axis.n_bins(), meta.channels);

    let per_view: Vec<ViewInspect> =
        views.iter().enumerate().map(|(v, img)| inspect_view(img, v, threshold)).collect();
    let with_signal: Vec<&ViewInspect> =
        per_view.iter().filter(|v| v.occupied_pixels > 0).collect();
    let mean_occupied = if with_signal.is_empty() {
        0.0
    } else {
        with_signal.iter().map(|v| v.occupied_pixel_mean).sum::<f64>() / with_signal.len() as f64
    };
    let refs: Vec<&TransientImage> = views.iter().collect();
    let background_estimate = estimate_background(&refs).ok();

    Ok(InspectReport {
        scene: meta.scene.clone(),
        views: meta.n_views(),
        width: meta.width,
        height: meta.height,
        n_bins: meta.time_axis.n_bins(),
        channels: meta.channels,
        bin_width_s: meta.time_axis.bin_width(),
        t_offset_s: meta.time_axis.t_offset(),
        expected_background_per_bin: background,
        background_estimate,
        per_view,
        mean_occupied_pixel_mean: mean_occupied,
    })
}

impl InspectReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| transient_core::error::CoreError::Format(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| transient_core::error::CoreError::Format(e.to_string()))
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scene {} | {} views of {}x{} px, {} bins x {} channels\n",
            self.scene, self.views, self.width, self.height, self.n_bins, self.channels
        ));
        out.push_str(&format!(
            "bin width {:.3e} s, offset {:.3e} s\n",
            self.bin_width_s, self.t_offset_s
        ));
        out.push_str(&format!(
            "expected background {:.4} counts/bin",
            self.expected_background_per_bin
        ));
        match self.background_estimate {
            Some(b) => out.push_str(&format!(", estimated {b:.4}\n")),
            None => out.push_str(", no quiet prefix to estimate from\n"),
        }
        for v in &self.per_view {
            out.push_str(&format!(
                "view {}: total {:.0} counts, {} occupied pixels (mean {:.1}), max {:.0}\n",
                v.view, v.total_counts, v.occupied_pixels, v.occupied_pixel_mean, v.max_count
            ));
        }
        out.push_str(&format!(
            "mean occupied-pixel counts: {:.1}\n",
            self.mean_occupied_pixel_mean
        ));
        out
    }
}
