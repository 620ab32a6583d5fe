//! Small binary format for float image planes (intensity, depth) plus a
//! plain-text graymap preview writer.
//!
//! Layout, all little-endian:
//!   magic "TIMG" | u32 version | u32 height | u32 width | u32 channels |
//!   f32 data, row-major [height][width][channel]

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use transient_core::error::{invalid, CoreError, Result};
use transient_core::io::{read_f32_vec, read_u32, write_f32_slice};

pub const TIMG_MAGIC: &[u8; 4] = b"TIMG";
pub const TIMG_VERSION: u32 = 1;

/// A dense float image plane with one or more channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImagePlane {
    pub fn from_data(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(invalid("image dimensions must be nonzero"));
        }
        if data.len() != height * width * channels {
            return Err(invalid(format!(
                "image data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(ImagePlane { height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }
}

pub fn write_timg(img: &ImagePlane, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TIMG_MAGIC)?;
    w.write_all(&TIMG_VERSION.to_le_bytes())?;
    for dim in [img.height, img.width, img.channels] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    write_f32_slice(&mut w, &img.data)?;
    w.flush()?;
    Ok(())
}

pub fn read_timg(path: &Path) -> Result<ImagePlane> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TIMG_MAGIC {
        return Err(CoreError::Format(format!(
            "{}: bad magic {magic:?}, expected TIMG",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != TIMG_VERSION {
        return Err(CoreError::Format(format!("unsupported timg version {version}")));
    }
    let height = read_u32(&mut r)? as usize;
    let width = read_u32(&mut r)? as usize;
    let channels = read_u32(&mut r)? as usize;
    let count = height
        .checked_mul(width)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| CoreError::Format("image dimensions overflow".into()))?;
    let data = read_f32_vec(&mut r, count)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(CoreError::Format("trailing bytes after timg payload".into()));
    }
    ImagePlane::from_data(height, width, channels, data)
        .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))
}

/// Writes a text portable graymap (P2) preview. Channels are averaged,
/// values below zero are clipped, and the image is scaled so its maximum
/// maps to 255 (an all-zero image stays black).
pub fn write_pgm_preview(img: &ImagePlane, path: &Path) -> Result<()> {
    let mut gray = vec![0.0f64; img.height * img.width];
    for (p, px) in gray.iter_mut().enumerate() {
        let start = p * img.channels;
        let sum: f64 = img.data[start..start + img.channels]
            .iter()
            .map(|&v| f64::from(v).max(0.0))
            .sum();
        *px = sum / img.channels as f64;
    }
    let peak = gray.iter().copied().fold(0.0f64, f64::max);
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };

    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "P2")?;
    writeln!(w, "{} {}", img.width, img.height)?;
    writeln!(w, "255")?;
    for row in gray.chunks(img.width) {
        let line: Vec<String> =
            row.iter().map(|&v| format!("{}", (v * scale).round() as u32)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ImagePlane {
        let data: Vec<f32> = (0..24).map(|i| i as f32 * 0.5 - 2.0).collect();
        ImagePlane::from_data(3, 4, 2, data).unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.timg");
        let img = sample();
        write_timg(&img, &path).unwrap();
        assert_eq!(read_timg(&path).unwrap(), img);
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.timg");
        let b = dir.path().join("b.timg");
        write_timg(&sample(), &a).unwrap();
        write_timg(&read_timg(&a).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn bad_magic_and_trailing_bytes_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.timg");
        std::fs::write(&path, b"NOPExxxxxxxxxxxxxxxx").unwrap();
        assert!(read_timg(&path).is_err());

        let good = dir.path().join("good.timg");
        write_timg(&sample(), &good).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();
        bytes.push(9);
        std::fs::write(&good, &bytes).unwrap();
        assert!(read_timg(&good).is_err());
    }

    #[test]
    fn pgm_preview_scales_peak_to_255() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = ImagePlane::from_data(2, 2, 1, vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        write_pgm_preview(&img, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "P2");
        assert_eq!(lines[1], "2 2");
        assert_eq!(lines[2], "255");
        assert_eq!(lines[3], "0 64");
        assert_eq!(lines[4], "128 255");
    }
}
