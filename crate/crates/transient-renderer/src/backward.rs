//! Hand-derived reverse pass for the renderer.
//!
//! Given the adjoint of a pixel's convolved transient, this walks each
//! cached footprint ray backwards, producing preactivation gradients for
//! every voxel touched. A space-carving term can be fused into the same
//! sweep: bins flagged as empty by the mask penalize the termination mass
//! `T_k alpha_k` of samples landing there.

use field_model::{ParamGradients, VoxelField, MAX_CHANNELS};
use transient_core::error::{invalid, Result};
use transient_core::{correlate_channels, splat_weights};

use crate::config::RenderConfig;
use crate::forward::PixelForward;

/// Space-carving input: per-bin emptiness flags plus the loss coefficient.
#[derive(Debug, Clone, Copy)]
pub struct CarveSpec<'a> {
    /// One flag per time bin; true marks a bin whose measurement is
    /// indistinguishable from background.
    pub mask: &'a [bool],
    /// Multiplier applied to the carving gradient (the loss weight).
    pub coeff: f64,
}

/// Backpropagates through one pixel's cached forward pass.
///
/// `d_tau_f` is dL/d(tau_f) for the pixel's convolved transient. Gradients
/// accumulate into `grads`. Returns the raw carving loss value
/// `sum_s w_s sum_k m_k T_k alpha_k` (zero when `carve` is `None`); its
/// contribution to the total loss is that value times `coeff`.
pub fn pixel_backward(
    field: &VoxelField,
    fwd: &PixelForward,
    config: &RenderConfig,
    d_tau_f: &[f64],
    carve: Option<CarveSpec<'_>>,
    grads: &mut ParamGradients,
) -> Result<f64> {
    let axis = &config.time_axis;
    let n_bins = axis.n_bins();
    let channels = field.channels();
    if d_tau_f.len() != n_bins * channels {
        return Err(invalid(format!(
            "adjoint length {} does not match {n_bins} bins x {channels} channels",
            d_tau_f.len()
        )));
    }
    if let Some(c) = &carve {
        if c.mask.len() != n_bins {
            return Err(invalid(format!(
                "carve mask length {} does not match {n_bins} bins",
                c.mask.len()
            )));
        }
    }

    // Adjoint of the convolution is correlation with the same kernel.
    let mut g = vec![0.0f64; n_bins * channels];
    correlate_channels(d_tau_f, n_bins, channels, &config.impulse, &mut g)?;

    let mut carve_value = 0.0f64;
    let mut d_sigma: Vec<f64> = Vec::new();
    let mut d_rad: Vec<f64> = Vec::new();
    for contrib in &fwd.rays {
        let Some(samples) = &contrib.samples else {
            continue;
        };
        let w_ray = contrib.weight;
        let kappa = carve.as_ref().map_or(0.0, |c| c.coeff * w_ray);
        let n = samples.len();
        d_sigma.clear();
        d_sigma.resize(n, 0.0);
        d_rad.clear();
        d_rad.resize(n * channels, 0.0);

        // Per-sample adjoints of the splatted value and of T^2 alpha.
        let mut g_total = vec![0.0f64; n];
        let mut masked = vec![false; n];
        for k in 0..n {
            let d = samples.distances[k];
            let (lo, w_lo, w_hi) = splat_weights(axis.bin_of_one_way_distance(d));
            let dd = d.max(config.min_distance);
            let inv_d2 = 1.0 / (dd * dd);
            let t = samples.transmittance[k];
            let t2_alpha = t * t * samples.alpha[k];
            for c in 0..channels {
                let mut a = 0.0;
                if lo >= 0 && (lo as usize) < n_bins {
                    a += w_lo * g[lo as usize * channels + c];
                }
                if lo + 1 >= 0 && ((lo + 1) as usize) < n_bins {
                    a += w_hi * g[(lo + 1) as usize * channels + c];
                }
                a *= w_ray;
                g_total[k] += a * samples.radiance[k * channels + c] * inv_d2;
                d_rad[k * channels + c] = a * t2_alpha * inv_d2;
            }
            if let Some(c) = &carve {
                let nearest = (axis.bin_of_one_way_distance(d) + 0.5).floor();
                if nearest >= 0.0 && (nearest as usize) < n_bins {
                    masked[k] = c.mask[nearest as usize];
                }
            }
        }

        // Reverse sweep: suffix sums realize the transmittance chain rule.
        let mut s_tau = 0.0f64; // sum_{j>k} G_j T_j^2 alpha_j
        let mut s_carve = 0.0f64; // sum_{j>k} m_j T_j alpha_j
        let delta = samples.delta;
        for k in (0..n).rev() {
            let t = samples.transmittance[k];
            let alpha = samples.alpha[k];
            let e = 1.0 - alpha;
            let mut ds = delta * (g_total[k] * t * t * e - 2.0 * s_tau);
            if masked[k] {
                ds += kappa * delta * (t * e - s_carve);
                s_carve += t * alpha;
                carve_value += w_ray * t * alpha;
            } else if kappa != 0.0 {
                ds -= kappa * delta * s_carve;
            }
            d_sigma[k] = ds;
            s_tau += g_total[k] * t * t * alpha;
        }

        for k in 0..n {
            let ds = d_sigma[k];
            let rad = &d_rad[k * channels..(k + 1) * channels];
            if ds == 0.0 && rad.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut d_radiance = [0.0f64; MAX_CHANNELS];
            d_radiance[..channels].copy_from_slice(rad);
            let p = contrib.ray.point_at(samples.distances[k]);
            field.query_backward(p, ds, &d_radiance, grads);
        }
    }
    Ok(carve_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::render_pixel_forward;
    use field_model::VoxelField;
    use transient_core::rng::SplitMix64;
    use transient_core::{
        Aabb, CameraModel, ImpulseResponse, Intrinsics, RigidPose, TimeAxis, Vec3,
    };

    fn camera_() -> CameraModel {
        CameraModel::new(
            Intrinsics::Pinhole { fx: 40.0, fy: 40.0, cx: 2.0, cy: 2.0 },
            RigidPose::identity(),
        )
        .unwrap()
    }

    fn config_(fp_sigma: f64, fp_samples: usize) -> RenderConfig {
        let axis = TimeAxis::new(512, 4e-11, 0.0).unwrap();
        RenderConfig {
            time_axis: axis.clone(),
            impulse: ImpulseResponse::gaussian(1.2).unwrap(),
            t_near: 0.0,
            t_far: 50.0,
            step_size: RenderConfig::max_step(&axis),
            min_distance: 0.02,
            footprint_sigma: fp_sigma,
            footprint_samples: fp_samples,
            seed: 5,
        }
    }

    fn random_field(channels: usize, seed: u64) -> VoxelField {
        let bbox = Aabb { min: Vec3::new(-0.4, -0.4, 0.9), max: Vec3::new(0.4, 0.4, 1.7) };
        let mut field = VoxelField::init(bbox, [3, 3, 3], channels).unwrap();
        let mut rng = SplitMix64::new(seed);
        for v in field.sigma_pre_mut() {
            *v = -1.0 + 2.0 * rng.next_f64();
        }
        for v in field.radiance_pre_mut() {
            *v = -2.0 + 2.0 * rng.next_f64();
        }
        field
    }

    /// Scalar objective J = <d_tau_f, tau_f> + coeff * carve_value, the exact
    /// quantity whose gradient pixel_backward claims to produce.
    fn objective(
        field: &VoxelField,
        cfg: &RenderConfig,
        pixel: [f64; 2],
        d_tau_f: &[f64],
        carve: Option<(&[bool], f64)>,
    ) -> f64 {
        let fwd = render_pixel_forward(field, &camera_(), pixel, cfg).unwrap();
        let mut j: f64 = fwd.tau_f.iter().zip(d_tau_f).map(|(a, b)| a * b).sum();
        if let Some((mask, coeff)) = carve {
            let mut grads = ParamGradients::zeros_like(field);
            let zero = vec![0.0f64; d_tau_f.len()];
            let carve_value = pixel_backward(
                field,
                &fwd,
                cfg,
                &zero,
                Some(CarveSpec { mask, coeff: 1.0 }),
                &mut grads,
            )
            .unwrap();
            j += coeff * carve_value;
        }
        j
    }

    fn finite_difference_check(channels: usize, carve_coeff: Option<f64>, fp_samples: usize) {
        let cfg = config_(if fp_samples > 1 { 0.3 } else { 0.0 }, fp_samples);
        let field = random_field(channels, 31);
        let pixel = [2.2, 1.8];
        let n = cfg.time_axis.n_bins() * channels;
        let mut rng = SplitMix64::new(77);
        let d_tau_f: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0 - 0.5).collect();
        let mask: Vec<bool> = (0..cfg.time_axis.n_bins()).map(|i| i % 3 != 1).collect();
        let carve = carve_coeff.map(|c| (mask.as_slice(), c));

        let fwd = render_pixel_forward(&field, &camera_(), pixel, &cfg).unwrap();
        let mut grads = ParamGradients::zeros_like(&field);
        pixel_backward(
            &field,
            &fwd,
            &cfg,
            &d_tau_f,
            carve_coeff.map(|c| CarveSpec { mask: &mask, coeff: c }),
            &mut grads,
        )
        .unwrap();

        let h = 1e-4;
        let mut field = field;
        let mut checked = 0usize;
        for param in 0..grads.sigma.len() + grads.radiance.len() {
            let (is_sigma, idx) = if param < grads.sigma.len() {
                (true, param)
            } else {
                (false, param - grads.sigma.len())
            };
            let read = |f: &mut VoxelField| {
                if is_sigma {
                    f.sigma_pre_mut()[idx]
                } else {
                    f.radiance_pre_mut()[idx]
                }
            };
            let write = |f: &mut VoxelField, v: f64| {
                if is_sigma {
                    f.sigma_pre_mut()[idx] = v;
                } else {
                    f.radiance_pre_mut()[idx] = v;
                }
            };
            let orig = read(&mut field);
            write(&mut field, orig + h);
            let j_plus = objective(&field, &cfg, pixel, &d_tau_f, carve);
            write(&mut field, orig - h);
            let j_minus = objective(&field, &cfg, pixel, &d_tau_f, carve);
            write(&mut field, orig);
            let fd = (j_plus - j_minus) / (2.0 * h);
            let an = if is_sigma { grads.sigma[idx] } else { grads.radiance[idx] };
            let tol = 1e-5 * an.abs().max(1.0);
            assert!(
                (fd - an).abs() <= tol,
                "param {param} (sigma={is_sigma}, idx={idx}): fd {fd} vs analytic {an}"
            );
            if an.abs() > 1e-9 {
                checked += 1;
            }
        }
        assert!(checked > 10, "only {checked} params had nonzero gradients");
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_difference_check(1, None, 1);
    }

    #[test]
    fn gradients_match_finite_differences_with_carving() {
        finite_difference_check(1, Some(0.7), 1);
    }

    #[test]
    fn gradients_match_finite_differences_multichannel_footprint() {
        finite_difference_check(3, Some(0.4), 3);
    }

    #[test]
    fn occluded_parameters_get_no_gradient() {
        // A dense wall in the front cells; nodes behind it see T^2 ~ 0.
        let bbox = Aabb { min: Vec3::new(-0.4, -0.4, 1.0), max: Vec3::new(0.4, 0.4, 2.0) };
        let mut field = VoxelField::init(bbox, [2, 2, 6], 1).unwrap();
        field.sigma_pre_mut().fill(-15.0);
        field.radiance_pre_mut().fill(-1.0);
        let [rx, ry, _] = field.resolution();
        for ix in 0..rx {
            for iy in 0..ry {
                for iz in [1usize, 2] {
                    let idx = field.node_index(ix, iy, iz);
                    field.sigma_pre_mut()[idx] = 4.5;
                }
            }
        }
        let cfg = config_(0.0, 1);
        let cam = camera_();
        let fwd = render_pixel_forward(&field, &cam, [2.0, 2.0], &cfg).unwrap();
        let d_tau_f = vec![1.0f64; cfg.time_axis.n_bins()];
        let mut grads = ParamGradients::zeros_like(&field);
        pixel_backward(&field, &fwd, &cfg, &d_tau_f, None, &mut grads).unwrap();

        let front_mag: f64 = (0..4)
            .flat_map(|n| {
                let iz = n % 2 + 1;
                let (ix, iy) = ((n / 2) % 2, 0);
                [grads.sigma[field.node_index(ix, iy, iz)].abs()]
            })
            .fold(0.0, f64::max);
        assert!(front_mag > 1e-6, "wall nodes should have gradient, got {front_mag}");
        for ix in 0..rx {
            for iy in 0..ry {
                let idx = field.node_index(ix, iy, 5);
                assert!(
                    grads.sigma[idx].abs() < 1e-8 && grads.radiance[idx].abs() < 1e-8,
                    "hidden node ({ix},{iy},5) has gradient {} / {}",
                    grads.sigma[idx],
                    grads.radiance[idx]
                );
            }
        }
    }

    #[test]
    fn carve_value_accumulates_only_masked_bins() {
        let bbox = Aabb { min: Vec3::new(-0.4, -0.4, 1.0), max: Vec3::new(0.4, 0.4, 1.5) };
        let mut field = VoxelField::init(bbox, [2, 2, 2], 1).unwrap();
        field.sigma_pre_mut().fill(1.0);
        let cfg = config_(0.0, 1);
        let fwd = render_pixel_forward(&field, &camera_(), [2.0, 2.0], &cfg).unwrap();
        let zero = vec![0.0f64; cfg.time_axis.n_bins()];

        let all = vec![true; cfg.time_axis.n_bins()];
        let mut grads = ParamGradients::zeros_like(&field);
        let full = pixel_backward(
            &field,
            &fwd,
            &cfg,
            &zero,
            Some(CarveSpec { mask: &all, coeff: 1.0 }),
            &mut grads,
        )
        .unwrap();
        // All mass masked: the carve value is the total termination mass.
        let samples = fwd.rays[0].samples.as_ref().unwrap();
        let mass: f64 = samples.transmittance.iter().zip(&samples.alpha).map(|(t, a)| t * a).sum();
        assert!((full - mass).abs() < 1e-12);
        assert!(grads.sigma.iter().any(|&g| g != 0.0));

        let none = vec![false; cfg.time_axis.n_bins()];
        let mut grads = ParamGradients::zeros_like(&field);
        let empty = pixel_backward(
            &field,
            &fwd,
            &cfg,
            &zero,
            Some(CarveSpec { mask: &none, coeff: 1.0 }),
            &mut grads,
        )
        .unwrap();
        assert_eq!(empty, 0.0);
        assert!(grads.sigma.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn adjoint_length_mismatch_rejected() {
        let field = random_field(1, 3);
        let cfg = config_(0.0, 1);
        let fwd = render_pixel_forward(&field, &camera_(), [2.0, 2.0], &cfg).unwrap();
        let mut grads = ParamGradients::zeros_like(&field);
        let bad = vec![0.0f64; 7];
        assert!(pixel_backward(&field, &fwd, &cfg, &bad, None, &mut grads).is_err());
        let good = vec![0.0f64; cfg.time_axis.n_bins()];
        let short_mask = vec![true; 3];
        assert!(pixel_backward(
            &field,
            &fwd,
            &cfg,
            &good,
            Some(CarveSpec { mask: &short_mask, coeff: 1.0 }),
            &mut grads
        )
        .is_err());
    }
}
