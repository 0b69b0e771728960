//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the operator code it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use quasi_core::diff::Axis;
use quasi_core::{Dims, Volume};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_volume(rng: &mut StdRng, dims: Dims) -> Volume {
    Volume::from_fn(dims, |_, _, _| rng.random())
}

/// Values on a coarse grid so windows contain ties.
pub fn quantized_volume(rng: &mut StdRng, dims: Dims, levels: u32) -> Volume {
    Volume::from_fn(dims, |_, _, _| f64::from(rng.random_range(0..levels)) / f64::from(levels))
}

pub fn random_dims(rng: &mut StdRng, max: usize) -> Dims {
    Dims::new(rng.random_range(1..=max), rng.random_range(1..=max), rng.random_range(1..=max)).unwrap()
}

/// Flat indices of the clamped window around `(x, y, z)`; planar grids use
/// a square window.
pub fn window_indices(dims: Dims, width: usize, x: usize, y: usize, z: usize) -> Vec<usize> {
    let h = (width / 2) as i64;
    let hz = if dims.nz == 1 { 0 } else { h };
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut out = Vec::new();
    for dz in -hz..=hz {
        for dy in -h..=h {
            for dx in -h..=h {
                let cx = clamp(x as i64 + dx, dims.nx);
                let cy = clamp(y as i64 + dy, dims.ny);
                let cz = clamp(z as i64 + dz, dims.nz);
                out.push(cx + dims.nx * (cy + dims.ny * cz));
            }
        }
    }
    out
}

/// Copy the window, sort it, take rank `floor(p (w - 1))`. The source is the
/// smallest flat index holding the selected value.
pub fn quantile_oracle(vol: &Volume, width: usize, p: f64) -> (Vec<f64>, Vec<usize>) {
    let dims = vol.dims();
    let data = vol.as_slice();
    let mut values = Vec::with_capacity(data.len());
    let mut sources = Vec::with_capacity(data.len());
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let idx = window_indices(dims, width, x, y, z);
                let mut w: Vec<f64> = idx.iter().map(|&i| data[i]).collect();
                w.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let r = (p * (w.len() - 1) as f64).floor() as usize;
                let v = w[r];
                let src = idx.iter().copied().filter(|&i| data[i] == v).min().unwrap();
                values.push(v);
                sources.push(src);
            }
        }
    }
    (values, sources)
}

/// Forward difference with a zero last row along `axis`.
pub fn dense_diff(dims: Dims, axis: Axis) -> DMatrix<f64> {
    let n = dims.len();
    let mut d = DMatrix::zeros(n, n);
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let i = x + dims.nx * (y + dims.ny * z);
                let next = match axis {
                    Axis::X if x + 1 < dims.nx => Some(i + 1),
                    Axis::Y if y + 1 < dims.ny => Some(i + dims.nx),
                    Axis::Z if z + 1 < dims.nz => Some(i + dims.nx * dims.ny),
                    _ => None,
                };
                if let Some(j) = next {
                    d[(i, i)] = -1.0;
                    d[(i, j)] = 1.0;
                }
            }
        }
    }
    d
}

/// Temporal forward difference over `t` frames of `n` voxels.
pub fn dense_temporal_diff(n: usize, t: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n * t, n * t);
    for f in 0..t.saturating_sub(1) {
        for i in 0..n {
            d[(f * n + i, f * n + i)] = -1.0;
            d[(f * n + i, (f + 1) * n + i)] = 1.0;
        }
    }
    d
}

pub fn dense_gather(sources: &[usize]) -> DMatrix<f64> {
    let n = sources.len();
    let mut q = DMatrix::zeros(n, n);
    for (i, &s) in sources.iter().enumerate() {
        q[(i, s)] = 1.0;
    }
    q
}

pub fn axes_for(dims: Dims) -> Vec<Axis> {
    if dims.nz == 1 {
        vec![Axis::X, Axis::Y]
    } else {
        vec![Axis::X, Axis::Y, Axis::Z]
    }
}

/// `beta sum_a D_a^T D_a`.
pub fn dense_laplacian(dims: Dims, beta: f64) -> DMatrix<f64> {
    let n = dims.len();
    let mut l = DMatrix::zeros(n, n);
    for a in axes_for(dims) {
        let d = dense_diff(dims, a);
        l += d.transpose() * &d;
    }
    l * beta
}

pub fn vec_of(v: &Volume) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Direct sliding-window SSIM with a 2-D Gaussian window, averaged over
/// every window fully inside each slice, then over slices.
pub fn ssim_oracle(a: &Volume, b: &Volume, peak: f64) -> f64 {
    let dims = a.dims();
    let win = 11usize;
    let sigma: f64 = 1.5;
    let c = (win / 2) as f64;
    let mut w = vec![0.0; win * win];
    for j in 0..win {
        for i in 0..win {
            let (dx, dy) = (i as f64 - c, j as f64 - c);
            w[j * win + i] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let mut slices = 0.0;
    for z in 0..dims.nz {
        let mut acc = 0.0;
        let mut count = 0;
        for y0 in 0..=dims.ny - win {
            for x0 in 0..=dims.nx - win {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for j in 0..win {
                    for i in 0..win {
                        let k = w[j * win + i];
                        let va = a.get(x0 + i, y0 + j, z).unwrap();
                        let vb = b.get(x0 + i, y0 + j, z).unwrap();
                        ma += k * va;
                        mb += k * vb;
                        saa += k * va * va;
                        sbb += k * vb * vb;
                        sab += k * va * vb;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        slices += acc / count as f64;
    }
    slices / dims.nz as f64
}

pub fn psnr_oracle(a: &Volume, b: &Volume, peak: f64) -> f64 {
    let mut sse = 0.0;
    for z in 0..a.dims().nz {
        for y in 0..a.dims().ny {
            for x in 0..a.dims().nx {
                let d = a.get(x, y, z).unwrap() - b.get(x, y, z).unwrap();
                sse += d * d;
            }
        }
    }
    let mse = sse / a.len() as f64;
    if mse == 0.0 {
        300.0
    } else {
        (10.0 * (peak * peak / mse).log10()).min(300.0)
    }
}
