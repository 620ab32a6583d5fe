//! Field checkpoint serialization.
//!
//! Layout, all little-endian:
//!   magic "TNRF" | u32 version | bbox min/max as 6 x f64 |
//!   u32 resolution x/y/z | u32 channels |
//!   sigma preactivations as f32 | radiance preactivations as f32
//!
//! Parameters are stored at f32 precision; reading widens back to f64, so
//! read-then-write reproduces a file byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use transient_core::error::{CoreError, Result};
use transient_core::io::{read_f32_vec, read_u32, write_f32_slice};
use transient_core::{Aabb, Vec3};

use crate::field::VoxelField;

pub const TNRF_MAGIC: &[u8; 4] = b"TNRF";
pub const TNRF_VERSION: u32 = 1;

pub fn write_checkpoint(field: &VoxelField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TNRF_MAGIC)?;
    w.write_all(&TNRF_VERSION.to_le_bytes())?;
    let bbox = field.bbox();
    for v in [bbox.min.x, bbox.min.y, bbox.min.z, bbox.max.x, bbox.max.y, bbox.max.z] {
        w.write_all(&v.to_le_bytes())?;
    }
    for r in field.resolution() {
        w.write_all(&(r as u32).to_le_bytes())?;
    }
    w.write_all(&(field.channels() as u32).to_le_bytes())?;
    let sigma: Vec<f32> = field.sigma_pre().iter().map(|&v| v as f32).collect();
    write_f32_slice(&mut w, &sigma)?;
    let radiance: Vec<f32> = field.radiance_pre().iter().map(|&v| v as f32).collect();
    write_f32_slice(&mut w, &radiance)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<VoxelField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TNRF_MAGIC {
        return Err(CoreError::Format(format!(
            "{}: bad magic {magic:?}, expected TNRF",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != TNRF_VERSION {
        return Err(CoreError::Format(format!("unsupported checkpoint version {version}")));
    }
    let mut bounds = [0.0f64; 6];
    for v in &mut bounds {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    let resolution = [
        read_u32(&mut r)? as usize,
        read_u32(&mut r)? as usize,
        read_u32(&mut r)? as usize,
    ];
    let channels = read_u32(&mut r)? as usize;
    let nodes = resolution[0]
        .checked_mul(resolution[1])
        .and_then(|v| v.checked_mul(resolution[2]))
        .ok_or_else(|| CoreError::Format("resolution overflow".into()))?;
    let sigma = read_f32_vec(&mut r, nodes)?;
    let radiance = read_f32_vec(&mut r, nodes * channels)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(CoreError::Format("trailing bytes after checkpoint payload".into()));
    }
    let bbox = Aabb::new(
        Vec3::new(bounds[0], bounds[1], bounds[2]),
        Vec3::new(bounds[3], bounds[4], bounds[5]),
    );
    VoxelField::from_parts(
        bbox,
        resolution,
        channels,
        sigma.into_iter().map(f64::from).collect(),
        radiance.into_iter().map(f64::from).collect(),
    )
    .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))
}
