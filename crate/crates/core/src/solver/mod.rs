//! ADMM solvers for the quantile-sparse denoising objectives.
//!
//! Both schemes split the objective with auxiliaries for `f - Q f` and the
//! spatial gradient (plus the temporal gradient for sequences), linearize
//! `Q` once per outer iteration, and solve the `f`-subproblem with a few
//! warm-started CG steps on IRLS-weighted normal equations.

mod cg;
mod mimo;
mod miso;

pub use cg::{cg_solve, CgReport};
pub use mimo::{energy_mimo, mimo_solve, mimo_solve_monitored, MimoState};
pub use miso::{energy_miso, miso_solve, miso_solve_monitored, MisoState};

use alloc::vec::Vec;

use crate::diff::{self, Axis};
use crate::error::{Error, Result};
use crate::quantile::KernelSpec;
use crate::robust::HuberSpec;
use crate::volume::Dims;

/// Soft threshold `sign(z) * max(|z| - gamma, 0)`.
#[inline]
pub fn shrink(z: f64, gamma: f64) -> f64 {
    let m = z.abs() - gamma;
    if m > 0.0 {
        m.copysign(z)
    } else {
        0.0
    }
}

/// Which pipeline a configuration targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Planar slices denoised one at a time (MISO).
    Image,
    /// A slab of slices denoised as one volume (MISO).
    Volumetric,
    /// A slab denoised as a sequence with temporal TV (MIMO).
    VolumetricTemporal,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Image => "image",
            Mode::Volumetric => "volumetric",
            Mode::VolumetricTemporal => "volumetric+temporal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "image" => Some(Mode::Image),
            "volumetric" => Some(Mode::Volumetric),
            "volumetric+temporal" => Some(Mode::VolumetricTemporal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Weight of the quantile-sparse prior.
    pub lambda: f64,
    /// Spatial TV weight.
    pub mu: f64,
    /// Temporal TV weight (sequence solver only).
    pub omega: f64,
    /// Penalty on `u = f - Q f`.
    pub alpha: f64,
    /// Penalty on `v = grad f`.
    pub beta: f64,
    /// Penalty on `d = grad_t F`.
    pub gamma: f64,
    pub k_outer: usize,
    pub k_inner: usize,
    pub k_cg: usize,
    /// Relative residual at which CG stops early.
    pub cg_tol: f64,
    pub kernel: KernelSpec,
    pub huber: HuberSpec,
    pub mode: Mode,
    /// Multiplier on the `W G` data term of the sequence right-hand side.
    pub data_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Preset::Bscan.config(1)
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [("lambda", self.lambda), ("mu", self.mu), ("omega", self.omega)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(alloc::format!("{name} must be finite and >= 0")));
            }
        }
        let mut positive = alloc::vec![("alpha", self.alpha), ("beta", self.beta)];
        if self.mode == Mode::VolumetricTemporal {
            positive.push(("gamma", self.gamma));
        }
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(alloc::format!("{name} must be finite and > 0")));
            }
        }
        if self.k_outer == 0 || self.k_inner == 0 || self.k_cg == 0 {
            return Err(Error::invalid("iteration counts must be >= 1"));
        }
        if !(self.cg_tol >= 0.0) {
            return Err(Error::invalid("cg_tol must be >= 0"));
        }
        if !(self.data_factor > 0.0 && self.data_factor.is_finite()) {
            return Err(Error::invalid("data_factor must be > 0"));
        }
        self.huber.validate()
    }
}

/// Published parameter sets. The OCT presets scale with the frame count `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// B-scan denoising with a 3x3 median.
    Bscan,
    /// Six-slice volumetric denoising with a 3x3x3 median.
    Volumetric,
    /// B-scan weights with the iteration budget of the convergence study.
    Convergence,
    /// C-arm CT sequence denoising.
    Ct,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Bscan, Preset::Volumetric, Preset::Convergence, Preset::Ct];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Bscan => "bscan",
            Preset::Volumetric => "volumetric",
            Preset::Convergence => "convergence",
            Preset::Ct => "ct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Slab depth the preset was tuned for.
    pub fn z_count(&self) -> Option<usize> {
        match self {
            Preset::Volumetric => Some(6),
            _ => None,
        }
    }

    pub fn config(&self, frames: usize) -> SolverConfig {
        let t = frames as f64;
        let base = SolverConfig {
            lambda: 5.0 * t,
            mu: 0.075 * t,
            omega: 0.0,
            alpha: 100.0 * t,
            beta: 1.5 * t,
            gamma: 1.0,
            k_outer: 20,
            k_inner: 2,
            k_cg: 3,
            cg_tol: 1e-6,
            kernel: KernelSpec::default(),
            huber: HuberSpec::AutoMad,
            mode: Mode::Image,
            data_factor: 1.0,
        };
        match self {
            Preset::Bscan => base,
            Preset::Volumetric => SolverConfig {
                lambda: 1.0 * t,
                mu: 0.0007 * t,
                alpha: 120.0 * t,
                beta: 0.05 * t,
                mode: Mode::Volumetric,
                ..base
            },
            Preset::Convergence => SolverConfig {
                k_outer: 30,
                k_inner: 10,
                k_cg: 3,
                ..base
            },
            Preset::Ct => SolverConfig {
                lambda: 0.0005,
                mu: 0.005,
                omega: 0.8,
                alpha: 0.1,
                beta: 0.1,
                gamma: 90.0,
                mode: Mode::VolumetricTemporal,
                ..base
            },
        }
    }
}

/// Objective value after one inner iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based outer iteration.
    pub outer: usize,
    /// 1-based inner iteration.
    pub inner: usize,
    pub energy: f64,
    /// Huber threshold used for this iteration's weights and energy; the
    /// largest one when thresholds are per frame.
    pub epsilon: f64,
    /// Optional caller-supplied score of the iterate (e.g. PSNR).
    pub metric: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOutput<T> {
    pub result: T,
    pub trace: Vec<TraceRecord>,
    /// Number of CG solves that stopped on a non-positive curvature.
    pub cg_breakdowns: usize,
}

/// `out = grad^T grad x` over `axes`; `scratch` must have the same length.
pub(crate) fn grad_normal_into(dims: Dims, axes: &[Axis], x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    out.fill(0.0);
    for &a in axes {
        diff::diff_into(dims, a, x, scratch);
        diff::diff_transpose_add(dims, a, scratch, out);
    }
}
