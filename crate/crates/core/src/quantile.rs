//! Local p-quantile filtering and its linearization.
//!
//! The filter replaces each voxel by an order statistic of its `d x d x d`
//! neighborhood (`d x d x 1` for planar volumes). Freezing the position of
//! that order statistic turns the filter into a 0/1 gather matrix `Q` with a
//! single one per row; `M = I - Q` is the residual operator of the prior.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::volume::{Dims, Volume};

/// Cubic window width and quantile level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    width: usize,
    p: f64,
}

impl KernelSpec {
    pub fn new(width: usize, p: f64) -> Result<Self> {
        if width == 0 || width.is_multiple_of(2) {
            return Err(Error::invalid("kernel width must be odd and positive"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("quantile level must lie in [0, 1]"));
        }
        Ok(Self { width, p })
    }

    pub fn median(width: usize) -> Result<Self> {
        Self::new(width, 0.5)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Number of window elements on a grid of `dims`.
    pub fn window_len(&self, dims: Dims) -> usize {
        if dims.is_planar() {
            self.width * self.width
        } else {
            self.width * self.width * self.width
        }
    }

    /// Zero-based rank `floor(p * (w - 1))` in the ascending window.
    pub fn rank(&self, window_len: usize) -> usize {
        let r = libm::floor(self.p * (window_len - 1) as f64) as usize;
        r.min(window_len - 1)
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { width: 3, p: 0.5 }
    }
}

/// Calls `visit(i, window)` for every voxel with the clamped flat indices of
/// its neighborhood.
fn for_each_window(dims: Dims, kernel: &KernelSpec, mut visit: impl FnMut(usize, &[usize])) {
    let r = (kernel.width / 2) as i64;
    let rz = if dims.is_planar() { 0 } else { r };
    let mut window = Vec::with_capacity(kernel.window_len(dims));
    for z in 0..dims.nz as i64 {
        for y in 0..dims.ny as i64 {
            for x in 0..dims.nx as i64 {
                window.clear();
                for dz in -rz..=rz {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            window.push(dims.clamped_flat(x + dx, y + dy, z + dz));
                        }
                    }
                }
                visit(dims.flat(x as usize, y as usize, z as usize), &window);
            }
        }
    }
}

fn select_rank(values: &mut [f64], rank: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(rank, f64::total_cmp);
    *v
}

/// Replaces every voxel by the rank-`floor(p (w-1))` statistic of its window.
pub fn quantile_filter(vol: &Volume, kernel: &KernelSpec) -> Volume {
    let dims = vol.dims();
    let data = vol.as_slice();
    let rank = kernel.rank(kernel.window_len(dims));
    let mut out = vec![0.0; dims.len()];
    let mut values = Vec::with_capacity(kernel.window_len(dims));
    for_each_window(dims, kernel, |i, window| {
        values.clear();
        values.extend(window.iter().map(|&j| data[j]));
        out[i] = select_rank(&mut values, rank);
    });
    Volume::from_vec(dims, out).expect("order statistics of finite data are finite")
}

/// Frozen arg-quantile positions: row `i` of `Q` has its one in column
/// `source[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantileMap {
    dims: Dims,
    source: Vec<usize>,
}

impl QuantileMap {
    pub fn identity(dims: Dims) -> Self {
        Self {
            dims,
            source: (0..dims.len()).collect(),
        }
    }

    /// Wraps explicit source indices; each must lie inside the grid.
    pub fn from_sources(dims: Dims, source: Vec<usize>) -> Result<Self> {
        if source.len() != dims.len() || source.iter().any(|&s| s >= dims.len()) {
            return Err(Error::invalid("quantile map sources do not fit the grid"));
        }
        Ok(Self { dims, source })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn sources(&self) -> &[usize] {
        &self.source
    }

    fn check(&self, vol: &Volume) -> Result<()> {
        if vol.dims() != self.dims {
            return Err(Error::ShapeMismatch {
                expected: self.dims,
                actual: vol.dims(),
            });
        }
        Ok(())
    }

    /// `Q x` (gather).
    pub fn apply(&self, vol: &Volume) -> Result<Volume> {
        self.check(vol)?;
        let mut out = Volume::zeros(self.dims);
        self.gather(vol.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `Q^T y` (scatter-add).
    pub fn apply_transpose(&self, vol: &Volume) -> Result<Volume> {
        self.check(vol)?;
        let mut out = Volume::zeros(self.dims);
        self.scatter_add(vol.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `M x = x - Q x`.
    pub fn apply_residual(&self, vol: &Volume) -> Result<Volume> {
        self.check(vol)?;
        let mut out = Volume::zeros(self.dims);
        self.residual_into(vol.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `M^T y = y - Q^T y`.
    pub fn apply_residual_transpose(&self, vol: &Volume) -> Result<Volume> {
        self.check(vol)?;
        let mut out = Volume::zeros(self.dims);
        self.residual_transpose_into(vol.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub(crate) fn gather(&self, x: &[f64], out: &mut [f64]) {
        for (o, &s) in out.iter_mut().zip(&self.source) {
            *o = x[s];
        }
    }

    /// Overwrites `out` with `Q^T y`.
    pub(crate) fn scatter_add(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&v, &s) in y.iter().zip(&self.source) {
            out[s] += v;
        }
    }

    pub(crate) fn residual_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, &xi), &s) in out.iter_mut().zip(x).zip(&self.source) {
            *o = xi - x[s];
        }
    }

    pub(crate) fn residual_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
        for (&v, &s) in y.iter().zip(&self.source) {
            out[s] -= v;
        }
    }
}

/// Linearizes the quantile filter at `vol`.
///
/// Ties are resolved towards the smallest flat index holding the selected
/// value, so `build_quantile_map(f).apply(f) == quantile_filter(f)` bitwise.
pub fn build_quantile_map(vol: &Volume, kernel: &KernelSpec) -> QuantileMap {
    let dims = vol.dims();
    let data = vol.as_slice();
    let rank = kernel.rank(kernel.window_len(dims));
    let mut source = vec![0usize; dims.len()];
    let mut values = Vec::with_capacity(kernel.window_len(dims));
    for_each_window(dims, kernel, |i, window| {
        values.clear();
        values.extend(window.iter().map(|&j| data[j]));
        let target = select_rank(&mut values, rank);
        source[i] = window
            .iter()
            .copied()
            .filter(|&j| data[j].total_cmp(&target) == Ordering::Equal)
            .min()
            .expect("selected value comes from the window");
    });
    QuantileMap { dims, source }
}

/// Nonlinear residual `f - Q(f)`.
pub fn quasi_residual(vol: &Volume, kernel: &KernelSpec) -> Volume {
    let filtered = quantile_filter(vol, kernel);
    vol.sub(&filtered).expect("filter preserves dims")
}

/// Prior value `||f - Q(f)||_1`.
pub fn quasi_energy(vol: &Volume, kernel: &KernelSpec) -> f64 {
    quasi_residual(vol, kernel).l1_norm()
}
