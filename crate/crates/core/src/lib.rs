//! Variational denoising with a quantile-sparse image prior.
//!
//! The prior penalizes `||f - Q(f)||_1`, where `Q` is a local p-quantile
//! filter (the median for `p = 0.5`), so a clean signal is modelled as a
//! near fixed point of the filter. Two ADMM schemes minimize the resulting
//! objectives together with a Huber data term and anisotropic TV:
//!
//! * [`solver::miso_solve`] denoises `T` registered frames into one volume.
//! * [`solver::mimo_solve`] denoises a sequence into a sequence and adds a
//!   temporal TV term.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `quasi-cli` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diff;
mod error;
pub mod metrics;
pub mod noise;
pub mod phantom;
pub mod quantile;
pub mod robust;
pub mod solver;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{Dims, Region, Volume, VolumeSequence};
