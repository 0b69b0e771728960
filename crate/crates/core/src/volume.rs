//! Dense scalar volumes and registered volume sequences.
//!
//! Voxels are stored flat with `x` fastest, then `y`, then `z`. A 2-D image
//! is a volume with `n_z = 1`. Any neighborhood that leaves the grid reads
//! the nearest in-grid voxel (replicate boundary).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Grid extent of a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::invalid("volume dimensions must be positive"));
        }
        nx.checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| Error::invalid("volume dimensions overflow"))?;
        Ok(Self { nx, ny, nz })
    }

    /// Shorthand for a planar image.
    pub fn planar(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn is_planar(&self) -> bool {
        self.nz == 1
    }

    #[inline]
    pub fn flat(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.nx;
        let yz = i / self.nx;
        (x, yz % self.ny, yz / self.ny)
    }

    pub fn contains(&self, x: i64, y: i64, z: i64) -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as u64) < self.nx as u64
            && (y as u64) < self.ny as u64
            && (z as u64) < self.nz as u64
    }

    /// Flat index after clamping each coordinate into the grid.
    #[inline]
    pub fn clamped_flat(&self, x: i64, y: i64, z: i64) -> usize {
        let cx = x.clamp(0, self.nx as i64 - 1) as usize;
        let cy = y.clamp(0, self.ny as i64 - 1) as usize;
        let cz = z.clamp(0, self.nz as i64 - 1) as usize;
        self.flat(cx, cy, cz)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// Dense 64-bit scalar field over a `Dims` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Dims,
    data: Vec<f64>,
}

impl Volume {
    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: Dims, value: f64) -> Self {
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// Wraps `data`, rejecting length mismatches and non-finite values.
    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::invalid("data length does not match dimensions"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("volume data must be finite"));
        }
        Ok(Self { dims, data })
    }

    pub(crate) fn from_raw(dims: Dims, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        Self { dims, data }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let data = (0..dims.len())
            .map(|i| {
                let (x, y, z) = dims.coords(i);
                f(x, y, z)
            })
            .collect();
        Self { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> Result<f64> {
        if x >= self.dims.nx || y >= self.dims.ny || z >= self.dims.nz {
            return Err(Error::OutOfBounds {
                x: x as i64,
                y: y as i64,
                z: z as i64,
                dims: self.dims,
            });
        }
        Ok(self.data[self.dims.flat(x, y, z)])
    }

    #[inline]
    pub fn clamped(&self, x: i64, y: i64, z: i64) -> f64 {
        self.data[self.dims.clamped_flat(x, y, z)]
    }

    /// Copies `z_count` consecutive slices starting at `z_start`.
    pub fn slab(&self, z_start: usize, z_count: usize) -> Result<Volume> {
        let n_z = self.dims.nz;
        if z_count == 0 || z_start.checked_add(z_count).is_none_or(|end| end > n_z) {
            return Err(Error::SlabOutOfRange {
                start: z_start,
                count: z_count,
                n_z,
            });
        }
        let plane = self.dims.nx * self.dims.ny;
        let dims = Dims::new(self.dims.nx, self.dims.ny, z_count)?;
        let data = self.data[z_start * plane..(z_start + z_count) * plane].to_vec();
        Ok(Volume { dims, data })
    }

    /// Concatenates volumes with equal `nx`, `ny` along `z`.
    pub fn stack(parts: &[Volume]) -> Result<Volume> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("cannot stack zero volumes"))?;
        let mut nz = 0;
        let mut data = Vec::new();
        for p in parts {
            if p.dims.nx != first.dims.nx || p.dims.ny != first.dims.ny {
                return Err(Error::ShapeMismatch {
                    expected: first.dims,
                    actual: p.dims,
                });
            }
            nz += p.dims.nz;
            data.extend_from_slice(&p.data);
        }
        Ok(Volume {
            dims: Dims::new(first.dims.nx, first.dims.ny, nz)?,
            data,
        })
    }

    pub(crate) fn check_same(&self, other: &Volume) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch {
                expected: self.dims,
                actual: other.dims,
            });
        }
        Ok(())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Volume) -> Result<()> {
        self.check_same(x)?;
        self.data
            .iter_mut()
            .zip(&x.data)
            .for_each(|(s, v)| *s += a * v);
        Ok(())
    }

    pub fn add(&self, other: &Volume) -> Result<Volume> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Volume) -> Result<Volume> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Volume) -> Result<Volume> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn zip_map(&self, other: &Volume, f: impl Fn(f64, f64) -> f64) -> Result<Volume> {
        self.check_same(other)?;
        Ok(Volume {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Volume {
        Volume {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Volume {
        self.map(|v| a * v)
    }

    pub fn dot(&self, other: &Volume) -> Result<f64> {
        self.check_same(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `T >= 1` registered volumes sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSequence {
    frames: Vec<Volume>,
}

impl VolumeSequence {
    pub fn new(frames: Vec<Volume>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("a sequence needs at least one frame"))?;
        for f in &frames[1..] {
            first.check_same(f)?;
        }
        Ok(Self { frames })
    }

    pub fn single(frame: Volume) -> Self {
        Self {
            frames: vec![frame],
        }
    }

    /// Sequence of `t` zero volumes.
    pub fn zeros(dims: Dims, t: usize) -> Result<Self> {
        Self::new(vec![Volume::zeros(dims); t])
    }

    pub fn dims(&self) -> Dims {
        self.frames[0].dims()
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frames(&self) -> &[Volume] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [Volume] {
        &mut self.frames
    }

    pub fn frame(&self, t: usize) -> &Volume {
        &self.frames[t]
    }

    pub fn into_frames(self) -> Vec<Volume> {
        self.frames
    }

    /// Framewise average.
    pub fn mean_of(&self) -> Volume {
        let mut acc = Volume::zeros(self.dims());
        for f in &self.frames {
            acc.data.iter_mut().zip(&f.data).for_each(|(a, v)| *a += v);
        }
        let inv = 1.0 / self.frames.len() as f64;
        acc.data.iter_mut().for_each(|a| *a *= inv);
        acc
    }

    pub fn slab(&self, z_start: usize, z_count: usize) -> Result<VolumeSequence> {
        let frames = self
            .frames
            .iter()
            .map(|f| f.slab(z_start, z_count))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frames })
    }

    pub(crate) fn check_same(&self, other: &VolumeSequence) -> Result<()> {
        self.frames[0].check_same(&other.frames[0])?;
        if self.len() != other.len() {
            return Err(Error::invalid("sequence lengths differ"));
        }
        Ok(())
    }

    pub fn dot(&self, other: &VolumeSequence) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| dot(&a.data, &b.data))
            .sum())
    }

    pub fn is_finite(&self) -> bool {
        self.frames.iter().all(Volume::is_finite)
    }
}

/// Axis-aligned box of voxels, used for region statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub origin: [usize; 3],
    pub extent: [usize; 3],
}

impl Region {
    pub fn new(origin: [usize; 3], extent: [usize; 3]) -> Self {
        Self { origin, extent }
    }

    pub fn voxel_count(&self) -> usize {
        self.extent.iter().product()
    }

    /// Fails when the region is empty or leaves `dims`.
    pub fn validate(&self, dims: Dims) -> Result<()> {
        if self.voxel_count() == 0 {
            return Err(Error::invalid("region is empty"));
        }
        let limits = [dims.nx, dims.ny, dims.nz];
        for axis in 0..3 {
            let end = self.origin[axis].checked_add(self.extent[axis]);
            if end.is_none_or(|e| e > limits[axis]) {
                return Err(Error::invalid("region exceeds volume bounds"));
            }
        }
        Ok(())
    }

    /// Flat indices of the region inside `dims`; call `validate` first.
    pub fn indices(&self, dims: Dims) -> impl Iterator<Item = usize> + '_ {
        let [ox, oy, oz] = self.origin;
        let [w, h, d] = self.extent;
        (oz..oz + d).flat_map(move |z| {
            (oy..oy + h).flat_map(move |y| (ox..ox + w).map(move |x| dims.flat(x, y, z)))
        })
    }
}
