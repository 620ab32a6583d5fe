//! Losses for histogram fitting and space carving.

use transient_core::error::{invalid, Result};

/// Carving weight preset for simulated datasets.
pub const LAMBDA_SC_SIMULATED: f64 = 1e-3;
/// Carving weight preset for captured datasets (noisier backgrounds).
pub const LAMBDA_SC_CAPTURED: f64 = 1e-2;

/// Log-domain L1 between a measured and a rendered transient:
/// `sum_n |ln(m_n + 1) - ln(t_n + 1)|`.
///
/// Writes dL/dt into `adjoint` (same length). The sign convention treats an
/// exact match as zero gradient. Negative rendered values are a hard error:
/// the renderer guarantees nonnegativity, so a negative here means a bug
/// upstream, not a data condition.
pub fn loss_tau(measured: &[f64], rendered: &[f64], adjoint: &mut [f64]) -> Result<f64> {
    if measured.len() != rendered.len() || adjoint.len() != rendered.len() {
        return Err(invalid(format!(
            "loss_tau length mismatch: measured {}, rendered {}, adjoint {}",
            measured.len(),
            rendered.len(),
            adjoint.len()
        )));
    }
    let mut total = 0.0f64;
    for ((&m, &t), adj) in measured.iter().zip(rendered).zip(adjoint.iter_mut()) {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(invalid(format!("measured value {m} must be finite and nonnegative")));
        }
        if !(t >= 0.0) {
            return Err(invalid(format!("rendered value {t} is negative or NaN")));
        }
        let diff = (m + 1.0).ln() - (t + 1.0).ln();
        total += diff.abs();
        // d|diff|/dt = -sign(diff) / (t + 1); sign(0) = 0.
        *adj = if diff == 0.0 { 0.0 } else { -diff.signum() / (t + 1.0) };
    }
    Ok(total)
}

/// Per-bin emptiness flags for one pixel's raw counts (`n_bins * channels`,
/// bin-major). A bin is flagged empty when every channel's count stays
/// strictly below the expected background level.
pub fn carving_mask(counts: &[f32], n_bins: usize, channels: usize, background: f64) -> Vec<bool> {
    debug_assert_eq!(counts.len(), n_bins * channels);
    let mut mask = vec![false; n_bins];
    for (n, flag) in mask.iter_mut().enumerate() {
        *flag = counts[n * channels..(n + 1) * channels]
            .iter()
            .all(|&c| (c as f64) < background);
    }
    mask
}

/// Space-carving loss for one ray: the termination mass landing in masked
/// bins, `sum_k m_k T_k alpha_k`. The fused renderer backward computes the
/// same quantity; this standalone form exists for testing and analysis.
pub fn loss_sc(transmittance: &[f64], alpha: &[f64], masked: &[bool]) -> f64 {
    transmittance
        .iter()
        .zip(alpha)
        .zip(masked)
        .map(|((&t, &a), &m)| if m { t * a } else { 0.0 })
        .sum()
}
