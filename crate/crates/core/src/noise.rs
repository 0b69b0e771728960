//! Noise models and the log transform for multiplicative noise.
//!
//! Every voxel draws from its own generator keyed by `(seed, frame, index)`,
//! so the output does not depend on evaluation order.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::volume::{Volume, VolumeSequence};

/// Noisy intensities are clipped to `[0, NOISE_CLIP_MAX]`.
pub const NOISE_CLIP_MAX: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// `g = f + n`, `n ~ N(0, sigma^2)`.
    Awgn { sigma: f64 },
    /// `g = Poisson(scale f) / scale`.
    Poisson { photon_scale: f64 },
    /// `g = f * exp(n)`, `n ~ N(0, sigma^2)`.
    Speckle { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn awgn(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Awgn { sigma },
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            NoiseKind::Awgn { sigma } | NoiseKind::Speckle { sigma } => sigma >= 0.0 && sigma.is_finite(),
            NoiseKind::Poisson { photon_scale } => photon_scale > 0.0 && photon_scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("noise parameters must be positive and finite"))
        }
    }
}

fn voxel_rng(seed: u64, frame: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&frame.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(b"quasinz1");
    ChaCha8Rng::from_seed(key)
}

/// Single noise realization (frame 0).
pub fn add_noise(vol: &Volume, spec: &NoiseSpec) -> Result<Volume> {
    add_noise_frame(vol, spec, 0)
}

/// Noise realization for the given frame index.
pub fn add_noise_frame(vol: &Volume, spec: &NoiseSpec, frame: u64) -> Result<Volume> {
    spec.validate()?;
    let data: Vec<f64> = vol
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let mut rng = voxel_rng(spec.seed, frame, i as u64);
            let g = match spec.kind {
                NoiseKind::Awgn { sigma } => {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    f + sigma * n
                }
                NoiseKind::Speckle { sigma } => {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    f * libm::exp(sigma * n)
                }
                NoiseKind::Poisson { photon_scale } => {
                    let rate = photon_scale * f.max(0.0);
                    if rate > 0.0 {
                        let count: f64 = Poisson::new(rate).expect("positive rate").sample(&mut rng);
                        count / photon_scale
                    } else {
                        0.0
                    }
                }
            };
            g.clamp(0.0, NOISE_CLIP_MAX)
        })
        .collect();
    Volume::from_vec(vol.dims(), data)
}

/// `T` independent realizations of `truth`.
pub fn make_sequence(truth: &Volume, frames: usize, spec: &NoiseSpec) -> Result<VolumeSequence> {
    if frames == 0 {
        return Err(Error::invalid("sequence needs at least one frame"));
    }
    let out = (0..frames as u64)
        .map(|t| add_noise_frame(truth, spec, t))
        .collect::<Result<Vec<_>>>()?;
    VolumeSequence::new(out)
}

/// `ln(v + offset)`; rejects negative input.
pub fn to_log_domain(vol: &Volume, offset: f64) -> Result<Volume> {
    if vol.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("log transform needs non-negative intensities"));
    }
    if !(offset >= 0.0) {
        return Err(Error::invalid("log offset must be non-negative"));
    }
    if offset == 0.0 && vol.as_slice().contains(&0.0) {
        return Err(Error::invalid("zero intensity with zero log offset"));
    }
    Ok(vol.map(|v| libm::log(v + offset)))
}

/// Inverse of [`to_log_domain`].
pub fn from_log_domain(vol: &Volume, offset: f64) -> Volume {
    vol.map(|v| libm::exp(v) - offset)
}
