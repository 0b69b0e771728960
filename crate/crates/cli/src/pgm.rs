//! Binary PGM (P5) slices. A stack is a directory of `.pgm` files, one per
//! z-slice, ordered by file name.

use std::path::{Path, PathBuf};

use quasi_core::{Dims, Volume};
use thiserror::Error;

use crate::error::{CliError, CliResult};
use crate::fsutil::write_atomic;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a binary PGM (missing P5 magic)")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("maxval {0} outside 1..=65535")]
    MaxVal(u32),
    #[error("short pixel data: expected {expected} bytes, got {actual}")]
    ShortData { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub width: usize,
    pub height: usize,
    /// Normalized to `[0, 1]` by `maxval`.
    pub pixels: Vec<f64>,
}

fn header_tokens(bytes: &[u8]) -> Result<(Vec<String>, usize), PgmError> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 4 {
        if i >= bytes.len() {
            return Err(PgmError::Header("truncated header".into()));
        }
        match bytes[i] {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
                    i += 1;
                }
                tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
            }
        }
    }
    // exactly one whitespace byte separates the header from the raster
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(PgmError::Header("missing separator after maxval".into()));
    }
    Ok((tokens, i + 1))
}

pub fn decode(bytes: &[u8]) -> Result<Slice, PgmError> {
    if !bytes.starts_with(b"P5") {
        return Err(PgmError::BadMagic);
    }
    let (tokens, offset) = header_tokens(bytes)?;
    if tokens[0] != "P5" {
        return Err(PgmError::BadMagic);
    }
    let num = |s: &str, what: &str| -> Result<u32, PgmError> {
        s.parse::<u32>().map_err(|_| PgmError::Header(format!("bad {what} {s:?}")))
    };
    let width = num(&tokens[1], "width")? as usize;
    let height = num(&tokens[2], "height")? as usize;
    let maxval = num(&tokens[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::Header("zero width or height".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::MaxVal(maxval));
    }
    let bpp = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * bpp;
    let data = &bytes[offset..];
    if data.len() < expected {
        return Err(PgmError::ShortData {
            expected,
            actual: data.len(),
        });
    }
    let scale = f64::from(maxval);
    let pixels = (0..width * height)
        .map(|k| {
            let raw = if bpp == 1 {
                u32::from(data[k])
            } else {
                u32::from(u16::from_be_bytes([data[2 * k], data[2 * k + 1]]))
            };
            f64::from(raw.min(maxval)) / scale
        })
        .collect();
    Ok(Slice { width, height, pixels })
}

/// Quantizes `[0, 1]` values (clamped) to `0..=maxval`.
pub fn encode(width: usize, height: usize, pixels: &[f64], maxval: u16) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let maxval = maxval.max(1);
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    let m = f64::from(maxval);
    for &p in pixels {
        let q = (p.clamp(0.0, 1.0) * m).round() as u16;
        if maxval < 256 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    out
}

fn slice_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("{}: no .pgm slices found", dir.display())));
    }
    Ok(paths)
}

pub fn read_pgm_stack(dir: &Path) -> CliResult<Volume> {
    let mut first: Option<(usize, usize)> = None;
    let mut data = Vec::new();
    let paths = slice_paths(dir)?;
    for path in &paths {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let slice = decode(&bytes).map_err(|source| CliError::Pgm {
            path: path.clone(),
            source,
        })?;
        match first {
            None => first = Some((slice.width, slice.height)),
            Some((w, h)) if (w, h) != (slice.width, slice.height) => {
                return Err(quasi_core::Error::ShapeMismatch {
                    expected: Dims::new(w, h, 1)?,
                    actual: Dims::new(slice.width, slice.height, 1)?,
                }
                .into());
            }
            _ => {}
        }
        data.extend(slice.pixels);
    }
    let (w, h) = first.expect("at least one slice");
    Ok(Volume::from_vec(Dims::new(w, h, paths.len())?, data)?)
}

/// Writes `slice_0000.pgm`, `slice_0001.pgm`, ... into `dir`.
pub fn write_pgm_stack(vol: &Volume, dir: &Path, maxval: u16) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let d = vol.dims();
    let plane = d.nx * d.ny;
    for z in 0..d.nz {
        let bytes = encode(d.nx, d.ny, &vol.as_slice()[z * plane..(z + 1) * plane], maxval);
        write_atomic(&dir.join(format!("slice_{z:04}.pgm")), &bytes)?;
    }
    Ok(())
}
