//! Binary serialization of transient image cubes (.trns files).
//!
//! Layout, all little-endian:
//!   magic "TRNS" | u32 version | u32 height | u32 width | u32 n_bins |
//!   u32 channels | u8 kind | f32 data, row-major [height][width][bin][channel]
//!
//! Reading then writing a file reproduces it byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::transient::{TransientImage, TransientKind};

pub const TRNS_MAGIC: &[u8; 4] = b"TRNS";
pub const TRNS_VERSION: u32 = 1;

pub fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_f32_vec(r: &mut impl Read, count: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_f32_slice(w: &mut impl Write, values: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_trns(img: &TransientImage, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TRNS_MAGIC)?;
    w.write_all(&TRNS_VERSION.to_le_bytes())?;
    for dim in [img.height(), img.width(), img.n_bins(), img.channels()] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    w.write_all(&[img.kind().code()])?;
    write_f32_slice(&mut w, img.data())?;
    w.flush()?;
    Ok(())
}

pub fn read_trns(path: &Path) -> Result<TransientImage> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TRNS_MAGIC {
        return Err(CoreError::Format(format!(
            "{}: bad magic {magic:?}, expected TRNS",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != TRNS_VERSION {
        return Err(CoreError::Format(format!("unsupported trns version {version}")));
    }
    let height = read_u32(&mut r)? as usize;
    let width = read_u32(&mut r)? as usize;
    let n_bins = read_u32(&mut r)? as usize;
    let channels = read_u32(&mut r)? as usize;
    let mut kind_byte = [0u8; 1];
    r.read_exact(&mut kind_byte)?;
    let kind = TransientKind::from_code(kind_byte[0])?;
    let count = height
        .checked_mul(width)
        .and_then(|v| v.checked_mul(n_bins))
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| CoreError::Format("image dimensions overflow".into()))?;
    let data = read_f32_vec(&mut r, count)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(CoreError::Format("trailing bytes after trns payload".into()));
    }
    TransientImage::from_data(height, width, n_bins, channels, kind, data)
        .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image() -> TransientImage {
        let mut img = TransientImage::new_zeroed(3, 2, 5, 2, TransientKind::Clean).unwrap();
        for (i, v) in img.pixel_mut(1, 1).iter_mut().enumerate() {
            *v = i as f32 * 0.25;
        }
        img.pixel_mut(2, 0)[3] = 7.5;
        img
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.trns");
        let img = sample_image();
        write_trns(&img, &path).unwrap();
        let back = read_trns(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn write_read_write_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.trns");
        let b = dir.path().join("b.trns");
        write_trns(&sample_image(), &a).unwrap();
        write_trns(&read_trns(&a).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.trns");
        std::fs::write(&path, b"JUNKxxxxxxxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(read_trns(&path), Err(CoreError::Format(_))));
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.trns");
        write_trns(&sample_image(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_trns(&path).is_err());
    }

    #[test]
    fn trailing_bytes_are_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.trns");
        write_trns(&sample_image(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_trns(&path).is_err());
    }
}
