//! Huber data fidelity and its IRLS weights.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::volume::{Volume, VolumeSequence};

/// Scales the MAD to a consistent Gaussian standard deviation.
pub const MAD_TO_SIGMA: f64 = 1.4826;
/// Huber threshold in units of sigma giving 95% Gaussian efficiency.
pub const HUBER_TUNING: f64 = 1.345;
/// Lower bound on the MAD scale estimate.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// `1/2 l^2` for `|l| <= eps`, `eps (|l| - eps/2)` beyond.
#[inline]
pub fn huber_phi(l: f64, eps: f64) -> f64 {
    let a = l.abs();
    if a <= eps {
        0.5 * l * l
    } else {
        eps * (a - 0.5 * eps)
    }
}

#[inline]
pub fn huber_phi_prime(l: f64, eps: f64) -> f64 {
    if l.abs() <= eps {
        l
    } else {
        eps * l.signum()
    }
}

/// `phi'(l) / |l|`, defined as 1 at `l = 0`.
#[inline]
pub fn irls_weight(l: f64, eps: f64) -> f64 {
    let a = l.abs();
    if a <= eps {
        1.0
    } else {
        eps / a
    }
}

/// Sum of `huber_phi` over the residuals.
pub fn huber_loss(residuals: &[f64], eps: f64) -> f64 {
    residuals.iter().map(|&l| huber_phi(l, eps)).sum()
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Robust scale `1.4826 * median(|r - median(r)|)`, floored at [`SIGMA_FLOOR`].
pub fn mad_sigma(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::invalid("MAD of an empty residual set"));
    }
    let mut buf: Vec<f64> = residuals.to_vec();
    let center = median_in_place(&mut buf);
    buf.iter_mut().for_each(|r| *r = (*r - center).abs());
    let mad = median_in_place(&mut buf);
    Ok((MAD_TO_SIGMA * mad).max(SIGMA_FLOOR))
}

pub fn auto_epsilon(residuals: &[f64]) -> Result<f64> {
    Ok(HUBER_TUNING * mad_sigma(residuals)?)
}

/// How the Huber threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum HuberSpec {
    Fixed(f64),
    /// `1.345 * mad_sigma` over the residuals of all frames, recomputed at
    /// every weight update.
    #[default]
    AutoMad,
    /// `1.345 * mad_sigma` of each frame's own residuals.
    AutoMadPerFrame,
}

impl HuberSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HuberSpec::Fixed(eps) if !(eps > 0.0 && eps.is_finite()) => {
                Err(Error::invalid("fixed Huber threshold must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Threshold for the given pooled residuals.
    pub fn epsilon(&self, residuals: &[f64]) -> Result<f64> {
        match *self {
            HuberSpec::Fixed(eps) => Ok(eps),
            HuberSpec::AutoMad | HuberSpec::AutoMadPerFrame => auto_epsilon(residuals),
        }
    }
}

/// Diagonals of the IRLS weight matrices, one volume per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub frames: Vec<Volume>,
    /// Huber threshold of each frame; all equal unless per-frame.
    pub epsilons: Vec<f64>,
}

impl WeightField {
    /// Per-voxel sum over frames, the diagonal of `sum_t W_t`.
    pub fn sum(&self) -> Volume {
        let mut acc = Volume::zeros(self.frames[0].dims());
        for w in &self.frames {
            acc.axpy(1.0, w).expect("weight frames share dims");
        }
        acc
    }

    /// Largest threshold over frames (the pooled one when shared).
    pub fn max_epsilon(&self) -> f64 {
        self.epsilons.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Threshold for frame `t` from a list holding either one shared value or
/// one value per frame.
pub fn frame_epsilon(epsilons: &[f64], t: usize) -> Result<f64> {
    match epsilons {
        [eps] => Ok(*eps),
        _ => epsilons
            .get(t)
            .copied()
            .ok_or_else(|| Error::invalid("need one Huber threshold or one per frame")),
    }
}

fn weights_from_residuals(residuals: Vec<Volume>, spec: &HuberSpec) -> Result<WeightField> {
    spec.validate()?;
    let epsilons = match spec {
        HuberSpec::Fixed(eps) => vec![*eps; residuals.len()],
        HuberSpec::AutoMad => {
            let pooled: Vec<f64> = residuals
                .iter()
                .flat_map(|r| r.as_slice().iter().copied())
                .collect();
            vec![auto_epsilon(&pooled)?; residuals.len()]
        }
        HuberSpec::AutoMadPerFrame => residuals
            .iter()
            .map(|r| auto_epsilon(r.as_slice()))
            .collect::<Result<Vec<_>>>()?,
    };
    let frames = residuals
        .iter()
        .zip(&epsilons)
        .map(|(r, &eps)| r.map(|l| irls_weight(l, eps)))
        .collect();
    Ok(WeightField { frames, epsilons })
}

/// Weights `W_t = irls_weight(f - g_t)` for a single estimate and `T` inputs.
pub fn build_weights(f: &Volume, inputs: &VolumeSequence, spec: &HuberSpec) -> Result<WeightField> {
    let residuals = inputs
        .frames()
        .iter()
        .map(|g| f.sub(g))
        .collect::<Result<Vec<_>>>()?;
    weights_from_residuals(residuals, spec)
}

/// Weights `W_t = irls_weight(F_t - G_t)` for a sequence estimate.
pub fn build_weights_sequence(
    estimate: &VolumeSequence,
    inputs: &VolumeSequence,
    spec: &HuberSpec,
) -> Result<WeightField> {
    estimate.check_same(inputs)?;
    let residuals = estimate
        .frames()
        .iter()
        .zip(inputs.frames())
        .map(|(f, g)| f.sub(g))
        .collect::<Result<Vec<_>>>()?;
    weights_from_residuals(residuals, spec)
}
