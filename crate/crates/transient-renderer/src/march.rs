//! Uniform ray marching through a voxel field's bounds.

use field_model::VoxelField;
use transient_core::Ray;

use crate::config::RenderConfig;

/// Samples taken along one ray, all arrays the same length.
///
/// The clipped bounds intersection `[a, b]` is divided into `K` equal
/// segments and the field is sampled at the segment midpoints, so the
/// segments tile `[a, b]` exactly and a constant-density field reproduces
/// the closed-form transmittance to machine precision.
#[derive(Debug, Clone)]
pub struct RaySamples {
    /// Distance from the ray origin to each sample midpoint.
    pub distances: Vec<f64>,
    /// Segment length; identical for every sample of one ray.
    pub delta: f64,
    /// Activated density at each sample.
    pub sigma: Vec<f64>,
    /// Activated radiance, `channels` entries per sample.
    pub radiance: Vec<f64>,
    /// Per-sample opacity `1 - exp(-sigma * delta)`.
    pub alpha: Vec<f64>,
    /// Transmittance accumulated before each sample; starts at 1.
    pub transmittance: Vec<f64>,
}

impl RaySamples {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Transmittance remaining after the last sample.
    pub fn final_transmittance(&self) -> f64 {
        match self.transmittance.last() {
            Some(&t) => t * (1.0 - self.alpha[self.alpha.len() - 1]),
            None => 1.0,
        }
    }
}

/// Marches a ray through the field bounds, or None when the ray misses the
/// bounds inside `[t_near, t_far]`.
pub fn march(field: &VoxelField, ray: &Ray, config: &RenderConfig) -> Option<RaySamples> {
    let (t0, t1) = field.bbox().intersect_ray(ray.origin, ray.direction)?;
    let a = t0.max(config.t_near);
    let b = t1.min(config.t_far);
    if !(b > a) {
        return None;
    }
    let n = ((b - a) / config.step_size).ceil().max(1.0) as usize;
    let delta = (b - a) / n as f64;
    let channels = field.channels();

    let mut distances = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut radiance = Vec::with_capacity(n * channels);
    let mut alpha = Vec::with_capacity(n);
    let mut transmittance = Vec::with_capacity(n);

    let mut t_acc = 1.0f64;
    for k in 0..n {
        let d = a + (k as f64 + 0.5) * delta;
        let sample = field.query(ray.point_at(d));
        let e = (-sample.sigma * delta).exp();
        let t_next = t_acc * e;
        distances.push(d);
        sigma.push(sample.sigma);
        radiance.extend_from_slice(&sample.radiance[..channels]);
        alpha.push(floored_alpha(t_acc, t_next, e));
        transmittance.push(t_acc);
        t_acc = t_next;
    }

    Some(RaySamples { distances, delta, sigma, radiance, alpha, transmittance })
}

/// Opacity `1 - e` of one segment, floored by at most a couple of ulp so
/// that `t_acc * alpha <= t_acc - t_next` holds in exact arithmetic. The
/// stored per-sample masses `T_k alpha_k` then telescope to at most one no
/// matter how a consumer accumulates them; with the naive value the
/// independent roundings of `1 - e` and `t_acc * e` can push the true sum a
/// few ulp past one on near-total-collapse rays.
fn floored_alpha(t_acc: f64, t_next: f64, e: f64) -> f64 {
    let alpha = 1.0 - e;
    // Exact residual of the subtraction: t_acc - t_next == diff + err.
    let diff = t_acc - t_next;
    let bvirt = t_acc - diff;
    let avirt = diff + bvirt;
    let bround = bvirt - t_next;
    let around = t_acc - avirt;
    let err = around + bround;
    // mul_add rounds once, so the comparison sees the exact sign.
    if alpha.mul_add(t_acc, -diff) <= err {
        return alpha;
    }
    // Jump to the telescoping ratio itself, then nudge down the last ulp or
    // two; stepping down from `alpha` instead could take ~1/alpha steps.
    let mut capped = (diff / t_acc).min(alpha);
    while capped > 0.0 && capped.mul_add(t_acc, -diff) > err {
        capped = capped.next_down();
    }
    capped
}
