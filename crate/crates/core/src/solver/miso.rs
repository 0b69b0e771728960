//! Multiple-input single-output scheme: `T` registered frames in, one
//! volume out.

use alloc::vec;
use alloc::vec::Vec;

use super::{cg_solve, grad_normal_into, shrink, SolveOutput, SolverConfig, TraceRecord};
use crate::diff::{self, grad_spatial, tv_energy, Axis, GradientField};
use crate::error::{Error, Result};
use crate::quantile::{build_quantile_map, quasi_energy, QuantileMap};
use crate::robust::{build_weights, frame_epsilon, huber_loss, WeightField};
use crate::volume::{Volume, VolumeSequence};

/// Iterates of the single-output scheme.
#[derive(Debug, Clone)]
pub struct MisoState {
    pub f: Volume,
    pub u: Volume,
    pub v: GradientField,
    pub b_u: Volume,
    pub b_v: GradientField,
    pub map: QuantileMap,
    pub weights: WeightField,
    weight_sum: Volume,
}

impl MisoState {
    /// `f = mean of inputs`, all auxiliaries and Bregman variables zero,
    /// unit weights and `Q` linearized at `f`.
    pub fn new(inputs: &VolumeSequence, cfg: &SolverConfig) -> Self {
        let f = inputs.mean_of();
        let dims = f.dims();
        let axes = Axis::active(dims);
        let weights = WeightField {
            frames: vec![Volume::filled(dims, 1.0); inputs.len()],
            epsilons: vec![f64::NAN; inputs.len()],
        };
        Self {
            map: build_quantile_map(&f, &cfg.kernel),
            u: Volume::zeros(dims),
            v: GradientField::zeros(dims, axes),
            b_u: Volume::zeros(dims),
            b_v: GradientField::zeros(dims, axes),
            weight_sum: weights.sum(),
            weights,
            f,
        }
    }

    pub fn set_weights(&mut self, weights: WeightField) {
        self.weight_sum = weights.sum();
        self.weights = weights;
    }

    pub fn axes(&self) -> &[Axis] {
        self.v.axes()
    }

    /// `A x = sum_t W_t x + beta grad^T grad x + alpha M^T M x`.
    pub fn apply_normal(&self, cfg: &SolverConfig, x: &Volume) -> Result<Volume> {
        self.f.check_same(x)?;
        let mut out = Volume::zeros(x.dims());
        let mut scratch = NormalScratch::new(x.len());
        self.apply_normal_into(cfg, x.as_slice(), out.as_mut_slice(), &mut scratch);
        Ok(out)
    }

    fn apply_normal_into(&self, cfg: &SolverConfig, x: &[f64], out: &mut [f64], s: &mut NormalScratch) {
        let dims = self.f.dims();
        grad_normal_into(dims, self.axes(), x, &mut s.lap, &mut s.diff);
        self.map.residual_into(x, &mut s.diff);
        self.map.residual_transpose_into(&s.diff, &mut s.mtm);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.weight_sum.as_slice()[i] * x[i] + cfg.beta * s.lap[i] + cfg.alpha * s.mtm[i];
        }
    }

    /// `b = sum_t W_t g_t + beta grad^T (v - b_v) + alpha M^T (u - b_u)`.
    pub fn rhs(&self, cfg: &SolverConfig, inputs: &VolumeSequence) -> Result<Volume> {
        let dims = self.f.dims();
        if inputs.dims() != dims || inputs.len() != self.weights.frames.len() {
            return Err(Error::ShapeMismatch {
                expected: dims,
                actual: inputs.dims(),
            });
        }
        let n = dims.len();
        let mut b = vec![0.0; n];
        for (w, g) in self.weights.frames.iter().zip(inputs.frames()) {
            for ((bi, wi), gi) in b.iter_mut().zip(w.as_slice()).zip(g.as_slice()) {
                *bi += wi * gi;
            }
        }

        let mut tv_part = vec![0.0; n];
        let mut diff_buf = vec![0.0; n];
        for ((&axis, v), bv) in self.axes().iter().zip(self.v.components()).zip(self.b_v.components()) {
            for ((d, vi), bi) in diff_buf.iter_mut().zip(v.as_slice()).zip(bv.as_slice()) {
                *d = vi - bi;
            }
            diff::diff_transpose_add(dims, axis, &diff_buf, &mut tv_part);
        }

        for ((d, ui), bi) in diff_buf.iter_mut().zip(self.u.as_slice()).zip(self.b_u.as_slice()) {
            *d = ui - bi;
        }
        let mut quasi_part = vec![0.0; n];
        self.map.residual_transpose_into(&diff_buf, &mut quasi_part);

        for ((bi, t), q) in b.iter_mut().zip(&tv_part).zip(&quasi_part) {
            *bi += cfg.beta * t + cfg.alpha * q;
        }
        Volume::from_vec(dims, b).map_err(|_| Error::NonFinite { outer: 0, inner: 0 })
    }

    /// Shrinkage of the auxiliaries followed by the Bregman updates.
    fn update_splitting(&mut self, cfg: &SolverConfig) {
        let dims = self.f.dims();
        let mut mf = vec![0.0; dims.len()];
        self.map.residual_into(self.f.as_slice(), &mut mf);
        let t_u = cfg.lambda / cfg.alpha;
        for ((u, b), m) in self.u.as_mut_slice().iter_mut().zip(self.b_u.as_mut_slice()).zip(&mf) {
            *u = shrink(m + *b, t_u);
            *b += m - *u;
        }

        let t_v = cfg.mu / cfg.beta;
        let axes: Vec<Axis> = self.axes().to_vec();
        let mut g = vec![0.0; dims.len()];
        for (k, &axis) in axes.iter().enumerate() {
            diff::diff_into(dims, axis, self.f.as_slice(), &mut g);
            let v = self.v.components_mut()[k].as_mut_slice();
            let b = self.b_v.components_mut()[k].as_mut_slice();
            for ((vi, bi), gi) in v.iter_mut().zip(b.iter_mut()).zip(&g) {
                *vi = shrink(gi + *bi, t_v);
                *bi += gi - *vi;
            }
        }
    }
}

struct NormalScratch {
    lap: Vec<f64>,
    diff: Vec<f64>,
    mtm: Vec<f64>,
}

impl NormalScratch {
    fn new(n: usize) -> Self {
        Self {
            lap: vec![0.0; n],
            diff: vec![0.0; n],
            mtm: vec![0.0; n],
        }
    }
}

/// `sum_t rho(f - g_t) + lambda ||f - Q(f)||_1 + mu ||grad f||_1` with the
/// nonlinear quantile filter.
pub fn energy_miso(f: &Volume, inputs: &VolumeSequence, cfg: &SolverConfig, epsilons: &[f64]) -> Result<f64> {
    let mut data = 0.0;
    for (t, g) in inputs.frames().iter().enumerate() {
        data += huber_loss(f.sub(g)?.as_slice(), frame_epsilon(epsilons, t)?);
    }
    let mut energy = data;
    if cfg.lambda != 0.0 {
        energy += cfg.lambda * quasi_energy(f, &cfg.kernel);
    }
    if cfg.mu != 0.0 {
        energy += cfg.mu * tv_energy(&grad_spatial(f, Axis::active(f.dims())));
    }
    Ok(energy)
}

pub fn miso_solve(inputs: &VolumeSequence, cfg: &SolverConfig) -> Result<SolveOutput<Volume>> {
    miso_solve_monitored(inputs, cfg, &mut |_| None)
}

/// Like [`miso_solve`]; `monitor` scores each intermediate estimate and the
/// score is stored in the trace.
pub fn miso_solve_monitored(
    inputs: &VolumeSequence,
    cfg: &SolverConfig,
    monitor: &mut dyn FnMut(&Volume) -> Option<f64>,
) -> Result<SolveOutput<Volume>> {
    cfg.validate()?;
    if !inputs.is_finite() {
        return Err(Error::invalid("input frames must be finite"));
    }
    let mut state = MisoState::new(inputs, cfg);
    let mut scratch = NormalScratch::new(state.f.len());
    let mut trace = Vec::with_capacity(cfg.k_outer * cfg.k_inner);
    let mut cg_breakdowns = 0;

    for outer in 1..=cfg.k_outer {
        if outer > 1 {
            state.map = build_quantile_map(&state.f, &cfg.kernel);
        }
        for inner in 1..=cfg.k_inner {
            state.set_weights(build_weights(&state.f, inputs, &cfg.huber)?);
            let b = state.rhs(cfg, inputs).map_err(|_| Error::NonFinite { outer, inner })?;

            let mut x = state.f.as_slice().to_vec();
            let report = cg_solve(
                |p, out| state.apply_normal_into(cfg, p, out, &mut scratch),
                b.as_slice(),
                &mut x,
                cfg.k_cg,
                cfg.cg_tol,
            );
            cg_breakdowns += usize::from(report.breakdown);
            state.f = Volume::from_vec(state.f.dims(), x).map_err(|_| Error::NonFinite { outer, inner })?;

            state.update_splitting(cfg);
            let energy = energy_miso(&state.f, inputs, cfg, &state.weights.epsilons)?;
            if !energy.is_finite() {
                return Err(Error::NonFinite { outer, inner });
            }
            trace.push(TraceRecord {
                outer,
                inner,
                energy,
                epsilon: state.weights.max_epsilon(),
                metric: monitor(&state.f),
            });
        }
    }

    Ok(SolveOutput {
        result: state.f,
        trace,
        cg_breakdowns,
    })
}
