//! Exact sampling of `G ~ N(0, V)` and of the drifted observation
//! `X = μt + σG`.
//!
//! Every replication draws from its own ChaCha20 generator: the master seed
//! initializes the key via `seed_from_u64` and the replication index selects
//! the 64-bit ChaCha stream (`set_stream`). A `(master_seed, stream_index)`
//! pair therefore fixes the path bit for bit, and distinct indices address
//! non-overlapping keystreams. Normals come from `rand_distr::StandardNormal`
//! (ziggurat).

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::covmat::{CovarianceModel, TimeGrid};
use crate::error::{Error, Result};
use crate::fmt::fmt_g17;
use crate::kernels::KernelSpec;
use crate::linalg::lower_mul_vec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// `n` iid standard normals, deterministic in `seed`.
pub fn sample_standard_normals<T: Scalar>(n: usize, seed: SeedSpec) -> Vec<T> {
    let mut rng = seed.rng();
    (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<T> {
    pub g: Vec<T>,
    pub x: Vec<T>,
    pub mu_true: T,
    pub sigma_true: T,
}

impl<T: Scalar> PathSample<T> {
    /// CSV with header `index,t,G,X`.
    pub fn write_csv<W: Write>(&self, grid: &TimeGrid<T>, mut out: W) -> io::Result<()> {
        writeln!(out, "index,t,G,X")?;
        for (i, ((t, g), x)) in grid.times().iter().zip(&self.g).zip(&self.x).enumerate() {
            writeln!(out, "{},{},{},{}", i, fmt_g17(t.as_f64()), fmt_g17(g.as_f64()), fmt_g17(x.as_f64()))?;
        }
        Ok(())
    }
}

/// Draws `G = L z` and `X = μt + σG` for the replication addressed by `seed`.
pub fn sample_path<T: Scalar>(
    spec: &KernelSpec<T>,
    grid: &TimeGrid<T>,
    model: &CovarianceModel<T>,
    mu: T,
    sigma: T,
    seed: SeedSpec,
) -> Result<PathSample<T>> {
    spec.require_catalog()?;
    check_sigma(sigma)?;
    let z = sample_standard_normals(model.dim(), seed);
    path_from_normals(grid, model, mu, sigma, &z)
}

/// Deterministic variant of [`sample_path`] taking the standard normal
/// vector `z` directly. Used for fixtures and tests.
pub fn path_from_normals<T: Scalar>(
    grid: &TimeGrid<T>,
    model: &CovarianceModel<T>,
    mu: T,
    sigma: T,
    z: &[T],
) -> Result<PathSample<T>> {
    check_sigma(sigma)?;
    if grid.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: grid.len() });
    }
    let g = lower_mul_vec(model.chol(), z)?;
    let x = grid.times().iter().zip(&g).map(|(&t, &gi)| mu * t + sigma * gi).collect();
    Ok(PathSample { g, x, mu_true: mu, sigma_true: sigma })
}

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if sigma > T::zero() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveSigma(sigma.as_f64()))
    }
}
