//! Multiple-input multiple-output scheme: a sequence in, a sequence out,
//! with temporal TV coupling neighbouring frames.

use alloc::vec;
use alloc::vec::Vec;

use super::{cg_solve, grad_normal_into, shrink, SolveOutput, SolverConfig, TraceRecord};
use crate::diff::{self, grad_spatial, temporal_tv_energy, tv_energy, Axis, GradientField};
use crate::error::{Error, Result};
use crate::quantile::{build_quantile_map, quasi_energy, QuantileMap};
use crate::robust::{build_weights_sequence, frame_epsilon, huber_loss, WeightField};
use crate::volume::{Dims, Volume, VolumeSequence};

/// Iterates of the sequence scheme. Spatial quantities are per frame.
#[derive(Debug, Clone)]
pub struct MimoState {
    pub f: VolumeSequence,
    pub u: VolumeSequence,
    pub v: Vec<GradientField>,
    pub d: VolumeSequence,
    pub b_u: VolumeSequence,
    pub b_v: Vec<GradientField>,
    pub b_d: VolumeSequence,
    pub maps: Vec<QuantileMap>,
    pub weights: WeightField,
}

impl MimoState {
    /// `F = G`, everything else zero, unit weights, `Q_t` linearized at `F_t`.
    pub fn new(inputs: &VolumeSequence, cfg: &SolverConfig) -> Self {
        let dims = inputs.dims();
        let t = inputs.len();
        let axes = Axis::active(dims);
        let zeros = VolumeSequence::zeros(dims, t).expect("t >= 1");
        Self {
            maps: inputs.frames().iter().map(|f| build_quantile_map(f, &cfg.kernel)).collect(),
            f: inputs.clone(),
            u: zeros.clone(),
            v: vec![GradientField::zeros(dims, axes); t],
            d: zeros.clone(),
            b_u: zeros.clone(),
            b_v: vec![GradientField::zeros(dims, axes); t],
            b_d: zeros,
            weights: WeightField {
                frames: vec![Volume::filled(dims, 1.0); t],
                epsilons: vec![f64::NAN; inputs.len()],
            },
        }
    }

    fn dims(&self) -> Dims {
        self.f.dims()
    }

    fn frames(&self) -> usize {
        self.f.len()
    }

    fn axes(&self) -> &[Axis] {
        self.v[0].axes()
    }

    /// `A X = W X + beta grad^T grad X + gamma grad_t^T grad_t X + alpha M^T M X`.
    pub fn apply_normal(&self, cfg: &SolverConfig, x: &VolumeSequence) -> Result<VolumeSequence> {
        self.f.check_same(x)?;
        let flat = flatten(x);
        let mut out = vec![0.0; flat.len()];
        let mut s = Scratch::new(self.dims().len());
        self.apply_normal_into(cfg, &flat, &mut out, &mut s);
        Ok(unflatten(self.dims(), out))
    }

    fn apply_normal_into(&self, cfg: &SolverConfig, x: &[f64], out: &mut [f64], s: &mut Scratch) {
        let dims = self.dims();
        let n = dims.len();
        let t_len = self.frames();
        for t in 0..t_len {
            let xt = &x[t * n..(t + 1) * n];
            let ot = &mut out[t * n..(t + 1) * n];
            let map = &self.maps[t];
            grad_normal_into(dims, self.axes(), xt, &mut s.a, &mut s.b);
            map.residual_into(xt, &mut s.b);
            map.residual_transpose_into(&s.b, &mut s.c);
            let w = self.weights.frames[t].as_slice();
            for i in 0..n {
                ot[i] = w[i] * xt[i] + cfg.beta * s.a[i] + cfg.alpha * s.c[i];
            }
            // gamma * grad_t^T grad_t x, frame t
            if cfg.gamma != 0.0 && t_len > 1 {
                for i in 0..n {
                    let mut acc = 0.0;
                    if t + 1 < t_len {
                        acc -= x[(t + 1) * n + i] - xt[i];
                    }
                    if t > 0 {
                        acc += xt[i] - x[(t - 1) * n + i];
                    }
                    ot[i] += cfg.gamma * acc;
                }
            }
        }
    }

    /// `b = c W G + beta grad^T (V - B_V) + gamma grad_t^T (D - B_D) + alpha M^T (U - B_U)`
    /// with `c = cfg.data_factor`.
    pub fn rhs(&self, cfg: &SolverConfig, inputs: &VolumeSequence) -> Result<VolumeSequence> {
        self.f.check_same(inputs)?;
        let dims = self.dims();
        let n = dims.len();
        let t_len = self.frames();
        let mut b = vec![0.0; n * t_len];
        let mut buf = vec![0.0; n];
        let mut part = vec![0.0; n];
        let dd: Vec<Volume> = self
            .d
            .frames()
            .iter()
            .zip(self.b_d.frames())
            .map(|(d, bd)| d.sub(bd))
            .collect::<Result<_>>()?;

        for t in 0..t_len {
            let bt = &mut b[t * n..(t + 1) * n];
            let w = self.weights.frames[t].as_slice();
            let g = inputs.frame(t).as_slice();
            for i in 0..n {
                bt[i] = cfg.data_factor * w[i] * g[i];
            }

            part.fill(0.0);
            let comps = self.v[t].components().iter().zip(self.b_v[t].components());
            for (&axis, (v, bv)) in self.axes().iter().zip(comps) {
                for ((o, vi), bi) in buf.iter_mut().zip(v.as_slice()).zip(bv.as_slice()) {
                    *o = vi - bi;
                }
                diff::diff_transpose_add(dims, axis, &buf, &mut part);
            }
            bt.iter_mut().zip(&part).for_each(|(o, p)| *o += cfg.beta * p);

            for ((o, ui), bi) in buf.iter_mut().zip(self.u.frame(t).as_slice()).zip(self.b_u.frame(t).as_slice()) {
                *o = ui - bi;
            }
            self.maps[t].residual_transpose_into(&buf, &mut part);
            bt.iter_mut().zip(&part).for_each(|(o, p)| *o += cfg.alpha * p);

            if t_len > 1 {
                for i in 0..n {
                    let mut acc = 0.0;
                    if t + 1 < t_len {
                        acc -= dd[t].as_slice()[i];
                    }
                    if t > 0 {
                        acc += dd[t - 1].as_slice()[i];
                    }
                    bt[i] += cfg.gamma * acc;
                }
            }
        }
        let seq = unflatten(dims, b);
        if !seq.is_finite() {
            return Err(Error::NonFinite { outer: 0, inner: 0 });
        }
        Ok(seq)
    }

    fn update_splitting(&mut self, cfg: &SolverConfig) {
        let dims = self.dims();
        let n = dims.len();
        let t_len = self.frames();
        let axes: Vec<Axis> = self.axes().to_vec();
        let mut buf = vec![0.0; n];
        let t_u = cfg.lambda / cfg.alpha;
        let t_v = cfg.mu / cfg.beta;

        for t in 0..t_len {
            let f = self.f.frame(t).as_slice();
            self.maps[t].residual_into(f, &mut buf);
            let u = self.u.frames_mut()[t].as_mut_slice();
            let bu = self.b_u.frames_mut()[t].as_mut_slice();
            for ((ui, bi), m) in u.iter_mut().zip(bu.iter_mut()).zip(&buf) {
                *ui = shrink(m + *bi, t_u);
                *bi += m - *ui;
            }

            for (k, &axis) in axes.iter().enumerate() {
                diff::diff_into(dims, axis, f, &mut buf);
                let v = self.v[t].components_mut()[k].as_mut_slice();
                let bv = self.b_v[t].components_mut()[k].as_mut_slice();
                for ((vi, bi), gi) in v.iter_mut().zip(bv.iter_mut()).zip(&buf) {
                    *vi = shrink(gi + *bi, t_v);
                    *bi += gi - *vi;
                }
            }
        }

        // the last frame has no temporal neighbour; its difference stays zero
        let t_d = if cfg.gamma > 0.0 { cfg.omega / cfg.gamma } else { 0.0 };
        for t in 0..t_len {
            for i in 0..n {
                let g = if t + 1 < t_len {
                    self.f.frame(t + 1).as_slice()[i] - self.f.frame(t).as_slice()[i]
                } else {
                    0.0
                };
                let bd = &mut self.b_d.frames_mut()[t].as_mut_slice()[i];
                let di = shrink(g + *bd, t_d);
                *bd += g - di;
                self.d.frames_mut()[t].as_mut_slice()[i] = di;
            }
        }
    }
}

struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
        }
    }
}

fn flatten(seq: &VolumeSequence) -> Vec<f64> {
    seq.frames().iter().flat_map(|f| f.as_slice().iter().copied()).collect()
}

fn unflatten(dims: Dims, flat: Vec<f64>) -> VolumeSequence {
    let frames = flat
        .chunks(dims.len())
        .map(|c| Volume::from_raw(dims, c.to_vec()))
        .collect();
    VolumeSequence::new(frames).expect("at least one frame")
}

/// `rho(F - G) + lambda sum_t ||F_t - Q(F_t)||_1 + mu sum_t ||grad F_t||_1 + omega ||grad_t F||_1`.
pub fn energy_mimo(f: &VolumeSequence, inputs: &VolumeSequence, cfg: &SolverConfig, epsilons: &[f64]) -> Result<f64> {
    f.check_same(inputs)?;
    let axes = Axis::active(f.dims());
    let mut energy = 0.0;
    for (t, (ft, gt)) in f.frames().iter().zip(inputs.frames()).enumerate() {
        energy += huber_loss(ft.sub(gt)?.as_slice(), frame_epsilon(epsilons, t)?);
        if cfg.lambda != 0.0 {
            energy += cfg.lambda * quasi_energy(ft, &cfg.kernel);
        }
        if cfg.mu != 0.0 {
            energy += cfg.mu * tv_energy(&grad_spatial(ft, axes));
        }
    }
    if cfg.omega != 0.0 {
        energy += cfg.omega * temporal_tv_energy(f);
    }
    Ok(energy)
}

pub fn mimo_solve(inputs: &VolumeSequence, cfg: &SolverConfig) -> Result<SolveOutput<VolumeSequence>> {
    mimo_solve_monitored(inputs, cfg, &mut |_| None)
}

pub fn mimo_solve_monitored(
    inputs: &VolumeSequence,
    cfg: &SolverConfig,
    monitor: &mut dyn FnMut(&VolumeSequence) -> Option<f64>,
) -> Result<SolveOutput<VolumeSequence>> {
    cfg.validate()?;
    if !(cfg.gamma > 0.0) {
        return Err(Error::invalid("gamma must be > 0 for sequence denoising"));
    }
    if !inputs.is_finite() {
        return Err(Error::invalid("input frames must be finite"));
    }
    let mut state = MimoState::new(inputs, cfg);
    let mut scratch = Scratch::new(inputs.dims().len());
    let mut trace = Vec::with_capacity(cfg.k_outer * cfg.k_inner);
    let mut cg_breakdowns = 0;

    for outer in 1..=cfg.k_outer {
        if outer > 1 {
            state.maps = state.f.frames().iter().map(|f| build_quantile_map(f, &cfg.kernel)).collect();
        }
        for inner in 1..=cfg.k_inner {
            state.weights = build_weights_sequence(&state.f, inputs, &cfg.huber)?;
            let b = state.rhs(cfg, inputs).map_err(|_| Error::NonFinite { outer, inner })?;
            let b = flatten(&b);
            let mut x = flatten(&state.f);
            let report = cg_solve(
                |p, out| state.apply_normal_into(cfg, p, out, &mut scratch),
                &b,
                &mut x,
                cfg.k_cg,
                cfg.cg_tol,
            );
            cg_breakdowns += usize::from(report.breakdown);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { outer, inner });
            }
            state.f = unflatten(state.dims(), x);

            state.update_splitting(cfg);
            let energy = energy_mimo(&state.f, inputs, cfg, &state.weights.epsilons)?;
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
