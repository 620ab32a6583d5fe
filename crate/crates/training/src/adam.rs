//! Adam optimizer with a stepped learning-rate schedule.

use field_model::{ParamGradients, VoxelField};
use transient_core::error::{invalid, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Decay factor applied at each schedule milestone.
pub const SCHEDULE_GAMMA: f64 = 0.33;
/// Milestones as fractions of the total iteration count.
pub const SCHEDULE_FRACTIONS: [f64; 3] = [0.40, 0.60, 0.72];

/// Learning rate for 0-based iteration `iter`: the base rate decayed by
/// gamma once per milestone already reached, where milestone m fires at
/// iteration `floor(fraction_m * total_iters)`.
pub fn learning_rate_at(base_lr: f64, total_iters: usize, iter: usize) -> f64 {
    let mut lr = base_lr;
    for f in SCHEDULE_FRACTIONS {
        if iter >= (f * total_iters as f64).floor() as usize {
            lr *= SCHEDULE_GAMMA;
        }
    }
    lr
}

/// First and second moment estimates for every field parameter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    step: u64,
    m_sigma: Vec<f64>,
    v_sigma: Vec<f64>,
    m_radiance: Vec<f64>,
    v_radiance: Vec<f64>,
}

impl OptimizerState {
    pub fn new(field: &VoxelField) -> Self {
        OptimizerState {
            step: 0,
            m_sigma: vec![0.0; field.sigma_pre().len()],
            v_sigma: vec![0.0; field.sigma_pre().len()],
            m_radiance: vec![0.0; field.radiance_pre().len()],
            v_radiance: vec![0.0; field.radiance_pre().len()],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One dense Adam update (bias-corrected) over all parameters.
    pub fn step(&mut self, field: &mut VoxelField, grads: &ParamGradients, lr: f64) -> Result<()> {
        if grads.sigma.len() != self.m_sigma.len() || grads.radiance.len() != self.m_radiance.len() {
            return Err(invalid("gradient shape does not match optimizer state"));
        }
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(invalid(format!("learning rate must be positive, got {lr}")));
        }
        self.step += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        let update = |params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        };
        update(field.sigma_pre_mut(), &grads.sigma, &mut self.m_sigma, &mut self.v_sigma);
        update(field.radiance_pre_mut(), &grads.radiance, &mut self.m_radiance, &mut self.v_radiance);
        Ok(())
    }
}
