//! Mode dispatch around the solvers: slab selection, log transform,
//! per-slice image denoising and trace aggregation.

use quasi_core::metrics::psnr_from_mse;
use quasi_core::noise::{from_log_domain, to_log_domain};
use quasi_core::solver::{mimo_solve_monitored, miso_solve_monitored, Mode, TraceRecord};
use quasi_core::{Volume, VolumeSequence};

use crate::config::Resolved;
use crate::error::{CliError, CliResult};

/// Offset used by the log transform for multiplicative noise.
pub const LOG_OFFSET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub outer: usize,
    pub inner: usize,
    pub energy: f64,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    /// One frame for the single-output modes, `T` frames otherwise.
    pub result: VolumeSequence,
    pub trace: Vec<TraceRow>,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let with_psnr = rows.first().is_some_and(|r| r.psnr.is_some());
    let mut out = String::from(if with_psnr { "outer,inner,energy,psnr\n" } else { "outer,inner,energy\n" });
    for r in rows {
        out.push_str(&format!("{},{},{}", r.outer, r.inner, r.energy));
        if let (true, Some(p)) = (with_psnr, r.psnr) {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

fn sse(a: &Volume, b: &Volume) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Slab range: `z_start` plus `z_count` slices, or the rest of the volume.
fn slab_range(resolved: &Resolved, nz: usize) -> CliResult<(usize, usize)> {
    let start = resolved.z_start;
    let count = match resolved.z_count {
        Some(c) => c,
        None if start < nz => nz - start,
        None => 0,
    };
    if count == 0 || start + count > nz {
        return Err(quasi_core::Error::SlabOutOfRange {
            start,
            count,
            n_z: nz,
        }
        .into());
    }
    Ok((start, count))
}

pub fn denoise(inputs: &VolumeSequence, resolved: &Resolved, reference: Option<&VolumeSequence>) -> CliResult<DenoiseOutput> {
    let cfg = &resolved.solver;
    if let Some(r) = reference {
        if r.dims() != inputs.dims() {
            return Err(quasi_core::Error::ShapeMismatch {
                expected: inputs.dims(),
                actual: r.dims(),
            }
            .into());
        }
        let ok = r.len() == 1 || (cfg.mode == Mode::VolumetricTemporal && r.len() == inputs.len());
        if !ok {
            return Err(CliError::Usage(format!(
                "reference must have 1 frame{}",
                if cfg.mode == Mode::VolumetricTemporal { " or one per input frame" } else { "" }
            )));
        }
    }
    let (z0, zc) = slab_range(resolved, inputs.dims().nz)?;
    let mut seq = inputs.slab(z0, zc)?;
    let reference = reference.map(|r| r.slab(z0, zc)).transpose()?;
    if resolved.log_domain {
        let frames = seq.frames().iter().map(|f| to_log_domain(f, LOG_OFFSET)).collect::<Result<Vec<_>, _>>()?;
        seq = VolumeSequence::new(frames)?;
    }
    let log = resolved.log_domain;
    let back = |v: &Volume| if log { from_log_domain(v, LOG_OFFSET) } else { v.clone() };

    let voxels = |frames: usize| (seq.dims().len() * frames) as f64;
    let (result, trace) = match cfg.mode {
        Mode::Image => {
            let mut slices = Vec::with_capacity(zc);
            let mut energy: Vec<TraceRecord> = Vec::new();
            let mut err_sum: Vec<f64> = Vec::new();
            for z in 0..zc {
                let slice = seq.slab(z, 1)?;
                let ref_slice = reference.as_ref().map(|r| r.frame(0).slab(z, 1)).transpose()?;
                let mut sses = Vec::new();
                let out = miso_solve_monitored(&slice, cfg, &mut |f| {
                    if let Some(r) = &ref_slice {
                        sses.push(sse(&back(f), r));
                    }
                    None
                })?;
                if z == 0 {
                    energy = out.trace.clone();
                    err_sum = sses;
                } else {
                    for (acc, r) in energy.iter_mut().zip(&out.trace) {
                        acc.energy += r.energy;
                    }
                    for (acc, s) in err_sum.iter_mut().zip(sses) {
                        *acc += s;
                    }
                }
                slices.push(back(&out.result));
            }
            let n = voxels(1);
            let rows = rows_from(&energy, &err_sum, reference.is_some(), n);
            (VolumeSequence::single(Volume::stack(&slices)?), rows)
        }
        Mode::Volumetric => {
            let mut sses = Vec::new();
            let out = miso_solve_monitored(&seq, cfg, &mut |f| {
                if let Some(r) = &reference {
                    sses.push(sse(&back(f), r.frame(0)));
                }
                None
            })?;
            let rows = rows_from(&out.trace, &sses, reference.is_some(), voxels(1));
            (VolumeSequence::single(back(&out.result)), rows)
        }
        Mode::VolumetricTemporal => {
            let mut sses = Vec::new();
            let out = mimo_solve_monitored(&seq, cfg, &mut |f| {
                if let Some(r) = &reference {
                    let total = f
                        .frames()
                        .iter()
                        .enumerate()
                        .map(|(t, ft)| sse(&back(ft), r.frame(if r.len() == 1 { 0 } else { t })))
                        .sum();
                    sses.push(total);
                }
                None
            })?;
            let rows = rows_from(&out.trace, &sses, reference.is_some(), voxels(seq.len()));
            let frames: Vec<Volume> = out.result.frames().iter().map(back).collect();
            (VolumeSequence::new(frames)?, rows)
        }
    };
    Ok(DenoiseOutput { result, trace })
}

fn rows_from(trace: &[TraceRecord], sses: &[f64], with_psnr: bool, voxels: f64) -> Vec<TraceRow> {
    trace
        .iter()
        .enumerate()
        .map(|(k, r)| TraceRow {
            outer: r.outer,
            inner: r.inner,
            energy: r.energy,
            psnr: with_psnr.then(|| psnr_from_mse(sses[k] / voxels, 1.0)),
        })
        .collect()
}
