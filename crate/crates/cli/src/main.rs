use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feller_cli::{exit_code, run_analyze, run_simulate, run_validate, ExperimentConfig, Overrides, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "feller", version, about = "Analyze, simulate and validate Feller-process symbols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML, or a report.json to re-run)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides simulation.seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the criteria and bounds; writes report.json and curves.csv
    Analyze,
    /// Simulate paths; writes ensemble.flpe and simulation.json
    Simulate,
    /// Compare Monte-Carlo estimates with the bounds; writes margins.csv and validation.json
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = &cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    if let Some(k) = cli.threads {
        if k == 0 || rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            eprintln!("error: cannot start a pool of {k} threads");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let run = || -> feller_core::Result<String> {
        let mut cfg = ExperimentConfig::load(path)?;
        cfg.apply(&Overrides { seed: cli.seed, out: cli.out.clone() });
        let dir = cfg.out_dir().display().to_string();
        Ok(match cli.command {
            Command::Analyze => {
                let r = run_analyze(&cfg)?;
                let verdicts: Vec<String> = r.criteria.iter().map(|c| format!("{:?}={}", c.criterion, c.verdict)).collect();
                format!("analysis written to {dir} [{}]", verdicts.join(", "))
            }
            Command::Simulate => {
                let s = run_simulate(&cfg)?;
                format!("{} paths written to {} (sha256 {})", s.n_paths, s.file.display(), s.sha256)
            }
            Command::Validate => {
                let v = run_validate(&cfg)?;
                let checks: Vec<String> = v.checks.iter().map(|(k, ok)| format!("{k}={}", if *ok { "pass" } else { "fail" })).collect();
                format!("validation written to {dir} [{}]", checks.join(", "))
            }
        })
    };
    match run() {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
