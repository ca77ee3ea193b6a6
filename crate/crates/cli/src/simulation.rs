use std::path::{Path, PathBuf};
use std::time::Instant;

use feller_core::simulate::{
    simulate_levy, simulate_stable_like, symmetrize_paths, uniform_grid, PathEnsemble, Scheme, SimulationOptions,
    SymmetrizedEnsemble,
};
use feller_core::{FellerError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, SimulationConfig};
use crate::{ensure_dir, write_json, TOOLKIT_VERSION};

/// Per-coordinate moments of `X_t − x₀` at the last stored time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub t: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub file: PathBuf,
    pub bytes: u64,
    pub sha256: String,
    pub n_paths: usize,
    pub dimension: usize,
    pub n_times: usize,
    pub step: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub symmetrized: bool,
    pub moments: Moments,
    pub wall_time_seconds: f64,
}

pub(crate) fn options(sim: &SimulationConfig, seed: u64) -> SimulationOptions {
    SimulationOptions::new(sim.n_paths, seed).with_decimation(sim.decimation).with_h_max(sim.h_max)
}

/// Paths of the declared model before symmetrization.
pub(crate) fn simulate_base(cfg: &ExperimentConfig, grid: &[f64], opts: &SimulationOptions) -> Result<PathEnsemble> {
    let model = cfg.base_model()?;
    let x0 = cfg.x0();
    match model.stable_like_spec() {
        Some(spec) => simulate_stable_like(spec, &x0, grid, opts),
        None => simulate_levy(&model, &x0, grid, opts),
    }
}

/// Base paths and an independent mirror from the next stream range.
pub(crate) fn simulate_pair(cfg: &ExperimentConfig, grid: &[f64], opts: &SimulationOptions) -> Result<SymmetrizedEnsemble> {
    let base = simulate_base(cfg, grid, opts)?;
    let mirror = simulate_base(cfg, grid, &opts.mirror())?;
    symmetrize_paths(base, mirror)
}

/// Paths of the configured model: symmetrized paths when `symbol.symmetrize` is set.
pub fn simulate_configured(cfg: &ExperimentConfig, grid: &[f64], opts: &SimulationOptions) -> Result<PathEnsemble> {
    if cfg.symbol.symmetrize {
        Ok(simulate_pair(cfg, grid, opts)?.symmetrized)
    } else {
        simulate_base(cfg, grid, opts)
    }
}

/// The `[simulation]` grid and options with the seed made mandatory.
pub(crate) fn main_run(cfg: &ExperimentConfig) -> Result<(Vec<f64>, SimulationOptions)> {
    let seed = cfg.require_seed()?;
    let sim = cfg.simulation.as_ref().expect("checked by require_seed");
    Ok((uniform_grid(sim.h, sim.steps), options(sim, seed)))
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn moments(ens: &PathEnsemble) -> Moments {
    let k = ens.n_times() - 1;
    let d = ens.dimension;
    let n = ens.n_paths as f64;
    let mut mean = vec![0.0; d];
    for p in 0..ens.n_paths {
        for (m, (x, s)) in mean.iter_mut().zip(ens.position(p, k).iter().zip(&ens.start)) {
            *m += (x - s) / n;
        }
    }
    let mut variance = vec![0.0; d];
    for p in 0..ens.n_paths {
        for (j, v) in variance.iter_mut().enumerate() {
            let dev = ens.position(p, k)[j] - ens.start[j] - mean[j];
            *v += dev * dev / (n - 1.0).max(1.0);
        }
    }
    Moments { t: ens.time_grid[k], mean, variance }
}

/// Simulates the configured ensemble and writes `ensemble.flpe` and `simulation.json`.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulationSummary> {
    let started = Instant::now();
    cfg.validate()?;
    let (grid, opts) = main_run(cfg)?;
    let ens = simulate_configured(cfg, &grid, &opts)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let file = dir.join("ensemble.flpe");
    ens.save(&file)?;
    let bytes = std::fs::metadata(&file)?.len();
    if bytes != ens.encoded_len()? as u64 {
        return Err(FellerError::Numerical {
            message: "ensemble file size does not match its encoding".into(),
            error_estimate: 0.0,
        });
    }
    let summary = SimulationSummary {
        toolkit_version: TOOLKIT_VERSION.into(),
        config: cfg.clone(),
        sha256: sha256_file(&file)?,
        file,
        bytes,
        n_paths: ens.n_paths,
        dimension: ens.dimension,
        n_times: ens.n_times(),
        step: grid[1] - grid[0],
        horizon: *grid.last().unwrap(),
        scheme: ens.scheme,
        symmetrized: cfg.symbol.symmetrize,
        moments: moments(&ens),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("simulation.json"), &summary)?;
    Ok(summary)
}
