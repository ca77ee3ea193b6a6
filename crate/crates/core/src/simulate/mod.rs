//! Monte-Carlo paths of Lévy and stable-like processes and the local
//! symmetrization of a pair of ensembles.

pub mod ensemble;
pub mod sampler;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::symbol::{ExponentFamily, StableLikeSpec, SymbolModel};

pub use ensemble::{PathEnsemble, Scheme, SeedLineage, FLPE_MAGIC, FLPE_VERSION};
pub use sampler::{isotropic_stable, positive_stable, sample_stable, stable, PathStream};

/// Settings shared by the path generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub n_paths: usize,
    pub seed: u64,
    /// Keep every `decimation`-th simulated time.
    pub decimation: usize,
    /// Stream id of path 0; mirrors use a disjoint range.
    pub stream_offset: u64,
    /// Largest admissible step of the frozen-coefficient scheme.
    pub h_max: f64,
}

impl SimulationOptions {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self { n_paths, seed, decimation: 1, stream_offset: 0, h_max: 1e-3 }
    }

    pub fn with_decimation(mut self, decimation: usize) -> Self {
        self.decimation = decimation;
        self
    }

    pub fn with_stream_offset(mut self, offset: u64) -> Self {
        self.stream_offset = offset;
        self
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Options for an independent copy: the stream range after this one.
    pub fn mirror(&self) -> Self {
        self.with_stream_offset(self.stream_offset + self.n_paths as u64)
    }
}

/// `n + 1` equispaced times `0, h, …, n·h`.
pub fn uniform_grid(h: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * h).collect()
}

fn check_grid(grid: &[f64], decimation: usize) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(FellerError::config("time grid must start at 0 and hold at least two points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(FellerError::config("time grid must be strictly increasing and finite"));
    }
    if decimation == 0 || (grid.len() - 1) % decimation != 0 {
        return Err(FellerError::config(format!(
            "decimation {decimation} must divide the number of steps {}",
            grid.len() - 1
        )));
    }
    Ok(())
}

/// Runs `step(rng, k, dt, x)` along every path and stores decimated states.
fn generate<F>(
    dimension: usize,
    x0: &[f64],
    grid: &[f64],
    opts: &SimulationOptions,
    scheme: Scheme,
    step: F,
) -> Result<PathEnsemble>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, f64, &mut [f64], &mut [f64]) + Sync,
{
    if x0.len() != dimension {
        return Err(FellerError::config(format!("start has dimension {}, model has {dimension}", x0.len())));
    }
    if opts.n_paths == 0 {
        return Err(FellerError::config("n_paths must be positive"));
    }
    check_grid(grid, opts.decimation)?;
    let stored: Vec<f64> = grid.iter().step_by(opts.decimation).copied().collect();
    let per_path = stored.len() * dimension;
    let mut positions = vec![0.0; opts.n_paths * per_path];
    positions.par_chunks_mut(per_path).enumerate().for_each(|(p, out)| {
        let mut stream = PathStream::new(opts.seed, opts.stream_offset + p as u64);
        let mut x = x0.to_vec();
        let mut scratch = vec![0.0; dimension];
        out[..dimension].copy_from_slice(x0);
        for k in 0..grid.len() - 1 {
            let dt = grid[k + 1] - grid[k];
            step(stream.at_step(k as u64), dt, &mut x, &mut scratch);
            if (k + 1) % opts.decimation == 0 {
                let j = (k + 1) / opts.decimation;
                out[j * dimension..(j + 1) * dimension].copy_from_slice(&x);
            }
        }
    });
    Ok(PathEnsemble {
        n_paths: opts.n_paths,
        dimension,
        time_grid: stored,
        start: x0.to_vec(),
        scheme,
        seed_lineage: SeedLineage { root_seed: opts.seed, stream_offset: opts.stream_offset },
        decimation: opts.decimation,
        positions,
    })
}

/// Exact increments of an x-independent exponent on an arbitrary grid.
pub fn simulate_levy(model: &SymbolModel<f64>, x0: &[f64], grid: &[f64], opts: &SimulationOptions) -> Result<PathEnsemble> {
    let Some(exponent) = model.exponent() else {
        return Err(FellerError::config(format!(
            "model '{}' is not in the exactly samplable family (zero, brownian, alpha_stable, compound_poisson)",
            model.name
        )));
    };
    let family = exponent.family;
    let drift = exponent.drift.clone();
    generate(model.dimension(), x0, grid, opts, Scheme::ExactLevy, move |rng, dt, x, z| {
        match family {
            ExponentFamily::Zero => z.fill(0.0),
            ExponentFamily::Brownian { diffusion } => {
                let s = (2.0 * diffusion * dt).sqrt();
                for c in z.iter_mut() {
                    *c = s * sampler::normal(rng);
                }
            }
            ExponentFamily::AlphaStable { alpha, scale } => {
                isotropic_stable(alpha, rng, z);
                let s = (scale * dt).powf(1.0 / alpha);
                z.iter_mut().for_each(|c| *c *= s);
            }
            ExponentFamily::CompoundPoisson { rate, jump_std } => {
                let n = sampler::poisson(rate * dt, rng);
                let s = jump_std * (n as f64).sqrt();
                for c in z.iter_mut() {
                    *c = if n == 0 { 0.0 } else { s * sampler::normal(rng) };
                }
            }
        }
        for ((xi, zi), b) in x.iter_mut().zip(z.iter()).zip(&drift) {
            *xi += zi + b * dt;
        }
    })
}

/// Frozen-coefficient Euler scheme `X_{k+1} = X_k + h^{1/α(X_k)}·S_k` on a uniform grid.
pub fn simulate_stable_like(
    spec: &StableLikeSpec<f64>,
    x0: &[f64],
    grid: &[f64],
    opts: &SimulationOptions,
) -> Result<PathEnsemble> {
    check_grid(grid, opts.decimation)?;
    let h = grid[1] - grid[0];
    if grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(FellerError::config("the frozen-coefficient scheme needs a uniform time grid"));
    }
    if h > opts.h_max * (1.0 + 1e-12) {
        return Err(FellerError::config(format!("step {h} exceeds h_max = {}", opts.h_max)));
    }
    generate(spec.dimension(), x0, grid, opts, Scheme::EulerFrozen, |rng, dt, x, z| {
        let alpha = spec.alpha_at(x);
        isotropic_stable(alpha, rng, z);
        let s = dt.powf(1.0 / alpha);
        for (xi, zi) in x.iter_mut().zip(z.iter()) {
            *xi += s * zi;
        }
    })
}

/// `X^S = (X + 2x₀ − X̃)/2` for a base ensemble and an independent mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedEnsemble {
    pub base: PathEnsemble,
    pub mirror: PathEnsemble,
    /// The symmetrized paths; lineage and scheme are those of `base`.
    pub symmetrized: PathEnsemble,
    /// Base and mirror use disjoint random streams.
    pub independent: bool,
}

pub fn symmetrize_paths(base: PathEnsemble, mirror: PathEnsemble) -> Result<SymmetrizedEnsemble> {
    if base.time_grid != mirror.time_grid
        || base.n_paths != mirror.n_paths
        || base.dimension != mirror.dimension
        || base.start != mirror.start
    {
        return Err(FellerError::precondition("base and mirror must share start, grid, path count and dimension"));
    }
    let (a, b) = (base.seed_lineage, mirror.seed_lineage);
    let (ra, rb) = (a.streams(base.n_paths), b.streams(mirror.n_paths));
    let independent = a.root_seed != b.root_seed || ra.end <= rb.start || rb.end <= ra.start;
    let d = base.dimension;
    let positions = base
        .positions
        .iter()
        .zip(&mirror.positions)
        .enumerate()
        .map(|(i, (x, y))| {
            // (x + 2x₀ − y)/2, arranged to be exact when x = y
            base.start[i % d] + 0.5 * (x - y)
        })
        .collect();
    let symmetrized = PathEnsemble { positions, ..base.clone() };
    Ok(SymmetrizedEnsemble { base, mirror, symmetrized, independent })
}
