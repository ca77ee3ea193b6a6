//! Orchestration behind the `feller` binary: `analyze`, `simulate` and `validate`.

pub mod config;

mod analyze;
mod simulation;
mod validation;

use std::path::{Path, PathBuf};

use feller_core::{FellerError, Result};
use serde::Serialize;

pub use analyze::{run_analyze, AnalysisReport, HeatPoint, ModelInfo};
pub use config::ExperimentConfig;
pub use simulation::{run_simulate, simulate_configured, Moments, SimulationSummary};
pub use validation::{run_validate, ValidationReport};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for an invalid configuration or input.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for a numerical or I/O failure.
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(err: &FellerError) -> i32 {
    match err {
        FellerError::Config(_)
        | FellerError::Expression { .. }
        | FellerError::Domain(_)
        | FellerError::Precondition(_)
        | FellerError::Json(_) => EXIT_CONFIG,
        FellerError::Numerical { .. } | FellerError::Io(_) => EXIT_NUMERICAL,
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let (Some(seed), Some(sim)) = (o.seed, self.simulation.as_mut()) {
            sim.seed = Some(seed);
        }
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&FellerError::Config("x".into())), 2);
        assert_eq!(exit_code(&FellerError::Precondition("x".into())), 2);
        assert_eq!(exit_code(&FellerError::Expression { offset: 0, message: "x".into() }), 2);
        assert_eq!(exit_code(&FellerError::Numerical { message: "x".into(), error_estimate: 1.0 }), 3);
        assert_eq!(exit_code(&FellerError::Io(std::io::Error::other("x"))), 3);
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::parse(
            "[symbol]\nkind = \"zero\"\ndimension = 1\n[simulation]\nseed = 1\nn_paths = 1\nh = 0.1\nsteps = 1\n",
        )
        .unwrap();
        c.apply(&Overrides { seed: Some(9), out: Some("x".into()) });
        assert_eq!(c.require_seed().unwrap(), 9);
        assert_eq!(c.out_dir(), PathBuf::from("x"));
    }
}
