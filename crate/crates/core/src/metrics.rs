//! Full-reference (PSNR, SSIM) and region-based no-reference (MSR, CNR)
//! quality measures. Intensities are assumed normalized to a peak of 1.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::volume::{Region, Volume};

/// Reported PSNR for identical inputs.
pub const PSNR_CAP_DB: f64 = 300.0;
/// Floor on region standard deviations.
pub const STD_FLOOR: f64 = 1e-12;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

pub fn mse(reference: &Volume, test: &Volume) -> Result<f64> {
    reference.check_same(test)?;
    let sse: f64 = reference
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sse / reference.len() as f64)
}

/// PSNR from a mean squared error, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * libm::log10(peak * peak / mse)).min(PSNR_CAP_DB)
}

/// `10 log10(peak^2 / MSE)` in dB.
pub fn psnr(reference: &Volume, test: &Volume, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::invalid("PSNR peak must be positive"));
    }
    Ok(psnr_from_mse(mse(reference, test)?, peak))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, w) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *w = libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= s);
    k
}

/// Separable 'valid' Gaussian filtering of an `nx x ny` plane.
fn filter_valid(plane: &[f64], nx: usize, ny: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ox = nx + 1 - SSIM_WINDOW;
    let oy = ny + 1 - SSIM_WINDOW;
    let mut rows = vec![0.0; ox * ny];
    for y in 0..ny {
        for x in 0..ox {
            rows[y * ox + x] = (0..SSIM_WINDOW).map(|j| k[j] * plane[y * nx + x + j]).sum();
        }
    }
    let mut out = vec![0.0; ox * oy];
    for y in 0..oy {
        for x in 0..ox {
            out[y * ox + x] = (0..SSIM_WINDOW).map(|j| k[j] * rows[(y + j) * ox + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], nx: usize, ny: usize, peak: f64) -> f64 {
    let k = gaussian_kernel();
    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a, nx, ny, &k);
    let mu_b = filter_valid(b, nx, ny, &k);
    let aa = filter_valid(&prod(&|x, _| x * x), nx, ny, &k);
    let bb = filter_valid(&prod(&|_, y| y * y), nx, ny, &k);
    let ab = filter_valid(&prod(&|x, y| x * y), nx, ny, &k);
    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / n as f64
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5); volumes are scored
/// per z-slice and averaged.
pub fn ssim(reference: &Volume, test: &Volume, peak: f64) -> Result<f64> {
    reference.check_same(test)?;
    let dims = reference.dims();
    if dims.nx < SSIM_WINDOW || dims.ny < SSIM_WINDOW {
        return Err(Error::invalid("image is smaller than the 11x11 SSIM window"));
    }
    let plane = dims.nx * dims.ny;
    let mut total = 0.0;
    for z in 0..dims.nz {
        let r = &reference.as_slice()[z * plane..(z + 1) * plane];
        let t = &test.as_slice()[z * plane..(z + 1) * plane];
        total += ssim_plane(r, t, dims.nx, dims.ny, peak);
    }
    Ok(total / dims.nz as f64)
}

/// Mean and population standard deviation over a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub mean: f64,
    pub std: f64,
}

impl RegionStats {
    pub fn of(vol: &Volume, region: &Region) -> Result<Self> {
        region.validate(vol.dims())?;
        let data = vol.as_slice();
        let n = region.voxel_count() as f64;
        let mean = region.indices(vol.dims()).map(|i| data[i]).sum::<f64>() / n;
        let var = region
            .indices(vol.dims())
            .map(|i| (data[i] - mean) * (data[i] - mean))
            .sum::<f64>()
            / n;
        Ok(Self {
            mean,
            std: libm::sqrt(var),
        })
    }
}

/// Mean-to-standard-deviation ratio of the foreground region.
pub fn msr(vol: &Volume, fg: &Region) -> Result<f64> {
    let s = RegionStats::of(vol, fg)?;
    Ok(s.mean / s.std.max(STD_FLOOR))
}

/// `|mu_f - mu_b| / (0.5 sqrt(sigma_f^2 + sigma_b^2))`.
pub fn cnr(vol: &Volume, fg: &Region, bg: &Region) -> Result<f64> {
    let f = RegionStats::of(vol, fg)?;
    let b = RegionStats::of(vol, bg)?;
    let sf = f.std.max(STD_FLOOR);
    let sb = b.std.max(STD_FLOOR);
    Ok((f.mean - b.mean).abs() / (0.5 * libm::sqrt(sf * sf + sb * sb)))
}
