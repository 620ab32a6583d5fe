//! Time-resolved image cubes: one histogram per pixel per channel.

use crate::error::{invalid, Result};

/// What the stored per-bin values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransientKind {
    /// Expected photon arrival rate per emitted pulse (simulator output).
    Rate,
    /// Noise-free rendered transient in model units.
    Clean,
    /// Integer photon counts drawn from the observation model.
    NoisyCounts,
}

impl TransientKind {
    pub fn code(self) -> u8 {
        match self {
            TransientKind::Rate => 0,
            TransientKind::Clean => 1,
            TransientKind::NoisyCounts => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(TransientKind::Rate),
            1 => Ok(TransientKind::Clean),
            2 => Ok(TransientKind::NoisyCounts),
            other => Err(invalid(format!("unknown transient kind code {other}"))),
        }
    }
}

/// Dense `[height][width][bin][channel]` cube of nonnegative f32 values.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientImage {
    height: usize,
    width: usize,
    n_bins: usize,
    channels: usize,
    kind: TransientKind,
    data: Vec<f32>,
}

impl TransientImage {
    pub fn new_zeroed(
        height: usize,
        width: usize,
        n_bins: usize,
        channels: usize,
        kind: TransientKind,
    ) -> Result<Self> {
        Self::check_dims(height, width, n_bins, channels)?;
        Ok(TransientImage {
            height,
            width,
            n_bins,
            channels,
            kind,
            data: vec![0.0; height * width * n_bins * channels],
        })
    }

    pub fn from_data(
        height: usize,
        width: usize,
        n_bins: usize,
        channels: usize,
        kind: TransientKind,
        data: Vec<f32>,
    ) -> Result<Self> {
        Self::check_dims(height, width, n_bins, channels)?;
        if data.len() != height * width * n_bins * channels {
            return Err(invalid(format!(
                "data length {} does not match {height}x{width}x{n_bins}x{channels}",
                data.len()
            )));
        }
        let img = TransientImage { height, width, n_bins, channels, kind, data };
        img.validate()?;
        Ok(img)
    }

    fn check_dims(height: usize, width: usize, n_bins: usize, channels: usize) -> Result<()> {
        if height == 0 || width == 0 || n_bins == 0 {
            return Err(invalid("transient image dimensions must be nonzero"));
        }
        if channels == 0 {
            return Err(invalid("transient image needs at least one channel"));
        }
        Ok(())
    }

    /// Checks the value contract: finite, nonnegative, and integral for counts.
    pub fn validate(&self) -> Result<()> {
        for (i, &v) in self.data.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("entry {i} is {v}, expected finite nonnegative")));
            }
            if self.kind == TransientKind::NoisyCounts && v.fract() != 0.0 {
                return Err(invalid(format!("count entry {i} is {v}, expected an integer")));
            }
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn kind(&self) -> TransientKind {
        self.kind
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Per-pixel histogram slice, `n_bins * channels` long, bin-major.
    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let stride = self.n_bins * self.channels;
        let base = (row * self.width + col) * stride;
        &self.data[base..base + stride]
    }

    /// Mutable histogram slice. Callers must keep entries nonnegative.
    pub fn pixel_mut(&mut self, row: usize, col: usize) -> &mut [f32] {
        let stride = self.n_bins * self.channels;
        let base = (row * self.width + col) * stride;
        &mut self.data[base..base + stride]
    }

    /// Disjoint mutable pixel rows for parallel fills.
    pub fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, f32> {
        let stride = self.width * self.n_bins * self.channels;
        self.data.chunks_mut(stride)
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().cloned().fold(0.0, f32::max)
    }

    pub fn total(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Sums a pixel's histogram over bins, one value per channel.
    pub fn pixel_total(&self, row: usize, col: usize) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.channels];
        for bin in self.pixel(row, col).chunks(self.channels) {
            for (c, &v) in bin.iter().enumerate() {
                sums[c] += v as f64;
            }
        }
        sums
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major_bin_major() {
        let mut img = TransientImage::new_zeroed(2, 3, 4, 2, TransientKind::Rate).unwrap();
        img.pixel_mut(1, 2)[3 * 2 + 1] = 5.0;
        let idx = ((1 * 3 + 2) * 4 + 3) * 2 + 1;
        assert_eq!(img.data()[idx], 5.0);
        assert_eq!(img.pixel_total(1, 2), vec![0.0, 5.0]);
    }

    #[test]
    fn validate_rejects_negative_and_fractional_counts() {
        let bad = TransientImage::from_data(1, 1, 2, 1, TransientKind::Rate, vec![0.5, -1.0]);
        assert!(bad.is_err());
        let frac =
            TransientImage::from_data(1, 1, 2, 1, TransientKind::NoisyCounts, vec![1.0, 2.5]);
        assert!(frac.is_err());
        let ok = TransientImage::from_data(1, 1, 2, 1, TransientKind::NoisyCounts, vec![1.0, 2.0]);
        assert!(ok.is_ok());
    }

    #[test]
    fn kind_codes_round_trip() {
        for kind in [TransientKind::Rate, TransientKind::Clean, TransientKind::NoisyCounts] {
            assert_eq!(TransientKind::from_code(kind.code()).unwrap(), kind);
        }
        assert!(TransientKind::from_code(9).is_err());
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(TransientImage::new_zeroed(0, 1, 1, 1, TransientKind::Rate).is_err());
        assert!(TransientImage::new_zeroed(1, 1, 0, 1, TransientKind::Rate).is_err());
        assert!(TransientImage::new_zeroed(1, 1, 1, 0, TransientKind::Rate).is_err());
    }
}
