//! Forward differences and their adjoints for anisotropic TV.
//!
//! The difference leaving the grid is zero (replicate boundary), so
//! `grad^T grad` is symmetric positive semidefinite and annihilates
//! constants.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::volume::{Dims, Volume, VolumeSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// `x, y` for planar grids, `x, y, z` otherwise.
    pub fn active(dims: Dims) -> &'static [Axis] {
        if dims.is_planar() {
            &[Axis::X, Axis::Y]
        } else {
            &[Axis::X, Axis::Y, Axis::Z]
        }
    }

    #[inline]
    fn stride_extent(self, dims: Dims) -> (usize, usize) {
        match self {
            Axis::X => (1, dims.nx),
            Axis::Y => (dims.nx, dims.ny),
            Axis::Z => (dims.nx * dims.ny, dims.nz),
        }
    }
}

/// One difference volume per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    axes: Vec<Axis>,
    components: Vec<Volume>,
}

impl GradientField {
    pub fn zeros(dims: Dims, axes: &[Axis]) -> Self {
        Self {
            axes: axes.to_vec(),
            components: axes.iter().map(|_| Volume::zeros(dims)).collect(),
        }
    }

    pub fn new(axes: Vec<Axis>, components: Vec<Volume>) -> Result<Self> {
        if axes.is_empty() || axes.len() != components.len() {
            return Err(Error::invalid("gradient field needs one component per axis"));
        }
        for c in &components[1..] {
            components[0].check_same(c)?;
        }
        Ok(Self { axes, components })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn components(&self) -> &[Volume] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Volume] {
        &mut self.components
    }

    pub fn dims(&self) -> Dims {
        self.components[0].dims()
    }

    pub fn dot(&self, other: &GradientField) -> Result<f64> {
        if self.axes != other.axes {
            return Err(Error::invalid("gradient fields use different axes"));
        }
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.dot(b))
            .sum()
    }
}

/// `out = forward difference of src along axis`.
pub(crate) fn diff_into(dims: Dims, axis: Axis, src: &[f64], out: &mut [f64]) {
    let (stride, n) = axis.stride_extent(dims);
    for (i, o) in out.iter_mut().enumerate() {
        let c = (i / stride) % n;
        *o = if c + 1 < n { src[i + stride] - src[i] } else { 0.0 };
    }
}

/// `out += adjoint of the forward difference applied to y`.
pub(crate) fn diff_transpose_add(dims: Dims, axis: Axis, y: &[f64], out: &mut [f64]) {
    let (stride, n) = axis.stride_extent(dims);
    for (i, o) in out.iter_mut().enumerate() {
        let c = (i / stride) % n;
        if c + 1 < n {
            *o -= y[i];
        }
        if c > 0 {
            *o += y[i - stride];
        }
    }
}

pub fn grad_spatial(vol: &Volume, axes: &[Axis]) -> GradientField {
    let dims = vol.dims();
    let components = axes
        .iter()
        .map(|&a| {
            let mut out = Volume::zeros(dims);
            diff_into(dims, a, vol.as_slice(), out.as_mut_slice());
            out
        })
        .collect();
    GradientField {
        axes: axes.to_vec(),
        components,
    }
}

/// Negative divergence: the exact adjoint of [`grad_spatial`].
pub fn grad_spatial_transpose(field: &GradientField) -> Volume {
    let dims = field.dims();
    let mut out = Volume::zeros(dims);
    for (&a, c) in field.axes.iter().zip(&field.components) {
        diff_transpose_add(dims, a, c.as_slice(), out.as_mut_slice());
    }
    out
}

/// Forward difference over the frame index; the last frame maps to zero.
pub fn grad_temporal(seq: &VolumeSequence) -> VolumeSequence {
    let frames = seq.frames();
    let out = (0..frames.len())
        .map(|t| match frames.get(t + 1) {
            Some(next) => next.sub(&frames[t]).expect("sequence frames share dims"),
            None => Volume::zeros(seq.dims()),
        })
        .collect();
    VolumeSequence::new(out).expect("non-empty")
}

pub fn grad_temporal_transpose(seq: &VolumeSequence) -> VolumeSequence {
    let frames = seq.frames();
    let t_len = frames.len();
    let out = (0..t_len)
        .map(|t| {
            let mut o = Volume::zeros(seq.dims());
            if t + 1 < t_len {
                o.axpy(-1.0, &frames[t]).expect("same dims");
            }
            if t > 0 {
                o.axpy(1.0, &frames[t - 1]).expect("same dims");
            }
            o
        })
        .collect();
    VolumeSequence::new(out).expect("non-empty")
}

/// Sum of absolute differences over all components.
pub fn tv_energy(field: &GradientField) -> f64 {
    field.components.iter().map(Volume::l1_norm).sum()
}

/// `||grad_t F||_1`
pub fn temporal_tv_energy(seq: &VolumeSequence) -> f64 {
    let frames = seq.frames();
    frames
        .windows(2)
        .map(|w| {
            w[1].as_slice()
                .iter()
                .zip(w[0].as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum()
}
