//! QVOL: a minimal little-endian container for volume sequences.
//!
//! ```text
//! "QVOL" | u16 version = 1 | u16 dtype = 0 (f32) | u32 nx, ny, nz, nt | f32 payload
//! ```
//! The payload is frame-major, then z, y, with x fastest.

use std::path::Path;

use quasi_core::{Dims, Volume, VolumeSequence};
use thiserror::Error;

use crate::error::{CliError, CliResult};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 4] = b"QVOL";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u16 = 0;
pub const HEADER_LEN: usize = 4 + 2 + 2 + 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QvolError {
    #[error("bad magic {0:?}, expected \"QVOL\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u16),
    #[error("short header: {actual} bytes, need {HEADER_LEN}")]
    ShortHeader { actual: usize },
    #[error("zero dimension in {0:?}")]
    ZeroDim([u32; 4]),
    #[error("dimensions {0:?} overflow the addressable size")]
    DimOverflow([u32; 4]),
    #[error("short payload: expected {expected} bytes, got {actual}")]
    ShortPayload { expected: usize, actual: usize },
    #[error("trailing data: expected {expected} payload bytes, got {actual}")]
    TrailingData { expected: usize, actual: usize },
    #[error("non-finite value at payload index {0}")]
    NonFinite(usize),
    #[error("dimension {0} does not fit in u32")]
    TooLarge(usize),
}

pub fn encode(seq: &VolumeSequence) -> Result<Vec<u8>, QvolError> {
    let d = seq.dims();
    let mut header = [0u32; 4];
    for (slot, v) in header.iter_mut().zip([d.nx, d.ny, d.nz, seq.len()]) {
        *slot = u32::try_from(v).map_err(|_| QvolError::TooLarge(v))?;
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * d.len() * seq.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (i, &v) in seq.frames().iter().flat_map(|f| f.as_slice()).enumerate() {
        let x = v as f32;
        if !x.is_finite() {
            return Err(QvolError::NonFinite(i));
        }
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<VolumeSequence, QvolError> {
    if bytes.len() < HEADER_LEN {
        return Err(QvolError::ShortHeader { actual: bytes.len() });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(QvolError::BadMagic(magic));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(QvolError::UnsupportedVersion(version));
    }
    let dtype = u16_at(6);
    if dtype != DTYPE_F32 {
        return Err(QvolError::UnsupportedDtype(dtype));
    }
    let raw = [u32_at(8), u32_at(12), u32_at(16), u32_at(20)];
    if raw.contains(&0) {
        return Err(QvolError::ZeroDim(raw));
    }
    let expected = raw
        .iter()
        .try_fold(4usize, |acc, &v| acc.checked_mul(v as usize))
        .ok_or(QvolError::DimOverflow(raw))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(QvolError::ShortPayload {
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(QvolError::TrailingData {
            expected,
            actual: payload.len(),
        });
    }
    let dims = Dims::new(raw[0] as usize, raw[1] as usize, raw[2] as usize).map_err(|_| QvolError::DimOverflow(raw))?;
    let n = dims.len();
    let mut frames = Vec::with_capacity(raw[3] as usize);
    for t in 0..raw[3] as usize {
        let mut data = Vec::with_capacity(n);
        for i in 0..n {
            let k = t * n + i;
            let v = f32::from_le_bytes(payload[4 * k..4 * k + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(QvolError::NonFinite(k));
            }
            data.push(f64::from(v));
        }
        frames.push(Volume::from_vec(dims, data).expect("length and finiteness checked"));
    }
    Ok(VolumeSequence::new(frames).expect("frames share dims"))
}

pub fn read_qvol(path: &Path) -> CliResult<VolumeSequence> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|source| CliError::Qvol {
        path: path.to_owned(),
        source,
    })
}

pub fn write_qvol(seq: &VolumeSequence, path: &Path) -> CliResult<()> {
    let bytes = encode(seq).map_err(|source| CliError::Qvol {
        path: path.to_owned(),
        source,
    })?;
    write_atomic(path, &bytes)
}

/// Reads a file that must hold exactly one frame.
pub fn read_volume(path: &Path) -> CliResult<Volume> {
    let seq = read_qvol(path)?;
    if seq.len() != 1 {
        return Err(CliError::Usage(format!(
            "{}: expected a single frame, found {}",
            path.display(),
            seq.len()
        )));
    }
    Ok(seq.into_frames().pop().unwrap())
}

pub fn write_volume(vol: &Volume, path: &Path) -> CliResult<()> {
    write_qvol(&VolumeSequence::single(vol.clone()), path)
}
