//! Deterministic synthetic ground truths.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::volume::{Dims, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    /// Horizontal bands along `y`, one per intensity, with seeded thickness
    /// jitter. Mimics retinal layering in a B-scan.
    LayeredSlab,
    /// Centered nested ellipsoids; `intensities[0]` is the background and
    /// each further entry fills the next, smaller shell.
    NestedEllipsoids,
    /// Cubic blocks of side `block`, each filled with a seeded pick from the
    /// intensity table.
    Blocks { block: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub dims: Dims,
    pub intensities: Vec<f64>,
    pub seed: u64,
}

impl PhantomSpec {
    /// Default retina-like table: six layers of alternating brightness.
    pub fn layered(dims: Dims, seed: u64) -> Self {
        Self {
            kind: PhantomKind::LayeredSlab,
            dims,
            intensities: alloc::vec![0.1, 0.6, 0.3, 0.8, 0.45, 0.2],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.intensities.is_empty() {
            return Err(Error::invalid("phantom needs at least one intensity"));
        }
        if self.intensities.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("phantom intensities must lie in [0, 1]"));
        }
        match self.kind {
            PhantomKind::LayeredSlab => {
                if self.intensities.len() < 4 {
                    return Err(Error::invalid("layered slab needs at least 4 layers"));
                }
                if self.dims.ny < self.intensities.len() {
                    return Err(Error::invalid("layered slab needs ny >= number of layers"));
                }
            }
            PhantomKind::Blocks { block: 0 } => {
                return Err(Error::invalid("block size must be positive"));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Row index at which each layer starts; strictly increasing, first is 0.
pub fn layer_starts(ny: usize, layers: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nominal = ny as f64 / layers as f64;
    let jitter = (nominal / 4.0) as i64;
    let mut starts = Vec::with_capacity(layers);
    starts.push(0usize);
    for j in 1..layers {
        let base = (j as f64 * nominal) as i64;
        let off = if jitter > 0 {
            Uniform::new_inclusive(-jitter, jitter).expect("valid range").sample(&mut rng)
        } else {
            0
        };
        let lo = starts[j - 1] as i64 + 1;
        let hi = (ny - (layers - j)) as i64;
        starts.push((base + off).clamp(lo, hi) as usize);
    }
    starts
}

pub fn make_phantom(spec: &PhantomSpec) -> Result<Volume> {
    spec.validate()?;
    let dims = spec.dims;
    let table = &spec.intensities;
    let vol = match spec.kind {
        PhantomKind::LayeredSlab => {
            let starts = layer_starts(dims.ny, table.len(), spec.seed);
            Volume::from_fn(dims, |_, y, _| {
                let layer = starts.partition_point(|&s| s <= y) - 1;
                table[layer]
            })
        }
        PhantomKind::NestedEllipsoids => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let wiggle = Uniform::new(0.95, 1.05).expect("valid range");
            let shells = table.len() - 1;
            let center = [dims.nx as f64 / 2.0, dims.ny as f64 / 2.0, dims.nz as f64 / 2.0];
            let radii: Vec<[f64; 3]> = (0..shells)
                .map(|k| {
                    let frac = 0.45 - 0.35 * k as f64 / shells.max(1) as f64;
                    [
                        frac * dims.nx as f64 * wiggle.sample(&mut rng),
                        frac * dims.ny as f64 * wiggle.sample(&mut rng),
                        frac * dims.nz as f64 * wiggle.sample(&mut rng),
                    ]
                })
                .collect();
            Volume::from_fn(dims, |x, y, z| {
                let p = [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5];
                let mut value = table[0];
                for (k, r) in radii.iter().enumerate() {
                    let mut q = 0.0;
                    for a in 0..3 {
                        // planar grids ignore z
                        if a == 2 && dims.nz == 1 {
                            continue;
                        }
                        let d = (p[a] - center[a]) / r[a];
                        q += d * d;
                    }
                    if q <= 1.0 {
                        value = table[k + 1];
                    }
                }
                value
            })
        }
        PhantomKind::Blocks { block } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let bx = dims.nx.div_ceil(block);
            let by = dims.ny.div_ceil(block);
            let bz = dims.nz.div_ceil(block);
            let pick = Uniform::new(0, table.len()).expect("non-empty table");
            let values: Vec<f64> = (0..bx * by * bz).map(|_| table[pick.sample(&mut rng)]).collect();
            Volume::from_fn(dims, |x, y, z| {
                values[x / block + bx * (y / block + by * (z / block))]
            })
        }
    };
    Ok(vol)
}
