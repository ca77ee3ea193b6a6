use std::collections::BTreeMap;
use std::time::Instant;

use feller_core::criteria::{exit_time_bound, BumpSpec, ExitTimeBound};
use feller_core::empirics::{
    exit_frequency, generator_finite_difference, occupation_fourier_check, symmetrization_law_check, validate_char_bound,
    write_margins_csv, CharBoundReport, ExitEstimate, GeneratorFit, MarginRow, OccupationFourierReport,
    SymmetrizationReport, SIGMA_MULTIPLE,
};
use feller_core::expr::Expr;
use feller_core::simulate::{uniform_grid, PathEnsemble, Scheme, SymmetrizedEnsemble};
use feller_core::{FellerError, Result};
use serde::{Deserialize, Serialize};

use crate::analyze::build_envelope;
use crate::config::{ExperimentConfig, ValidationConfig};
use crate::simulation::{main_run, options, simulate_configured, simulate_pair};
use crate::{ensure_dir, write_json, TOOLKIT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleInfo {
    /// File path, or `inline` for paths simulated from the config.
    pub source: String,
    pub n_paths: usize,
    pub dimension: usize,
    pub n_times: usize,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    pub fit: GeneratorFit,
    pub symbol_re: f64,
    pub symbol_im: f64,
    /// `|intercept − p(x₀, ξ)| / |p(x₀, ξ)|`
    pub relative_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitCheck {
    pub estimate: ExitEstimate,
    pub bound: ExitTimeBound,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub ensemble: EnsembleInfo,
    pub char_bound: CharBoundReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetrization: Option<SymmetrizationReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generator: Vec<GeneratorCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<OccupationFourierReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exit: Vec<ExitCheck>,
    /// Pass/fail per check.
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
    pub wall_time_seconds: f64,
}

fn frequencies(v: &[crate::config::Frequency], d: usize) -> Result<Vec<Vec<f64>>> {
    v.iter().map(|f| f.to_vec(d)).collect()
}

/// Runs the Monte-Carlo checks against the bounds and writes `margins.csv` and `validation.json`.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let started = Instant::now();
    cfg.validate()?;
    let v: &ValidationConfig =
        cfg.validation.as_ref().ok_or_else(|| FellerError::Config("a [validation] section is required".into()))?;
    let model = cfg.build_model()?;
    let d = model.dimension();
    let env = build_envelope(cfg, &model)?;
    let xi_set = frequencies(&v.xi_set, d)?;

    let mut pair: Option<SymmetrizedEnsemble> = None;
    let (ens, source) = match &v.ensemble {
        Some(path) => (PathEnsemble::load(path)?, path.display().to_string()),
        None => {
            let (grid, opts) = main_run(cfg)?;
            let ens = if v.symmetrization {
                let p = simulate_pair(cfg, &grid, &opts)?;
                let e = if cfg.symbol.symmetrize { p.symmetrized.clone() } else { p.base.clone() };
                pair = Some(p);
                e
            } else {
                simulate_configured(cfg, &grid, &opts)?
            };
            (ens, "inline".to_string())
        }
    };
    if ens.dimension != d {
        return Err(FellerError::Config(format!("ensemble has dimension {}, model has {d}", ens.dimension)));
    }
    let x0 = ens.start.clone();
    let mut checks = BTreeMap::new();
    let mut margins: Vec<MarginRow> = Vec::new();

    let char_bound = validate_char_bound(&ens, &env, &v.t_set, &xi_set)?;
    checks.insert("char_bound".to_string(), char_bound.passes(cfg.tolerances.min_fraction));
    margins.extend(char_bound.rows.iter().cloned());

    let symmetrization = if v.symmetrization {
        let p = match pair {
            Some(p) => p,
            None => {
                let (grid, opts) = main_run(cfg)?;
                simulate_pair(cfg, &grid, &opts)?
            }
        };
        let rep = symmetrization_law_check(&p, &v.t_set, &xi_set)?;
        checks.insert("symmetrization".to_string(), rep.independent && rep.n_within == rep.rows.len());
        for r in &rep.rows {
            margins.push(MarginRow {
                check: "symmetrization".into(),
                t: r.t,
                xi: r.xi.clone(),
                estimate: r.symmetrized_re,
                std_error: r.combined_std_error,
                bound: r.base_squared,
                margin: -r.deviation.abs(),
                within: r.within,
            });
        }
        Some(rep)
    } else {
        None
    };

    let mut generator = Vec::new();
    if let Some(h_set) = &v.generator_h {
        for xi in xi_set.iter().filter(|xi| xi.iter().any(|&c| c != 0.0)) {
            let fit = generator_finite_difference(&ens, &x0, xi, h_set)?;
            let p = model.eval(&x0, xi)?;
            let relative_error = (fit.intercept() - p).norm() / p.norm();
            let passed = !fit.inconclusive && relative_error <= cfg.tolerances.generator_rel;
            margins.push(MarginRow {
                check: "generator".into(),
                t: 0.0,
                xi: xi.clone(),
                estimate: fit.intercept_re,
                std_error: fit.intercept_std_error,
                bound: p.re,
                margin: p.re - fit.intercept_re,
                within: passed,
            });
            generator.push(GeneratorCheck { fit, symbol_re: p.re, symbol_im: p.im, relative_error, passed });
        }
        checks.insert("generator".to_string(), generator.iter().all(|g| g.passed));
    }

    let occupation = match &v.occupation {
        Some(o) => {
            let seed = cfg.require_seed()?;
            let sim = cfg.simulation.as_ref().expect("checked by require_seed");
            let steps = (o.horizon / o.h).round() as usize;
            let mut opts = options(sim, seed).with_decimation(1);
            opts.n_paths = o.n_paths;
            // Streams after those of the main ensemble and its mirror.
            let opts = opts.with_stream_offset(2 * sim.n_paths as u64);
            let occ = simulate_configured(cfg, &uniform_grid(o.h, steps), &opts)?;
            let rep = occupation_fourier_check(&occ, &env, &frequencies(&o.xi_set, d)?)?;
            checks.insert("occupation_fourier".to_string(), rep.all_pass());
            margins.extend(rep.margin_rows());
            Some(rep)
        }
        None => None,
    };

    let mut exit = Vec::new();
    if !v.exit.is_empty() {
        let bump = match &v.bump_profile {
            Some(src) => BumpSpec::profile(Expr::parse(src)?)?,
            None => BumpSpec::Standard,
        };
        for &[r, t] in &v.exit {
            let estimate = exit_frequency(&ens, &x0, r, t)?;
            let bound = exit_time_bound(&model, &x0, r, t, &bump)?;
            let passed = estimate.probability <= bound.clipped + SIGMA_MULTIPLE * estimate.std_error;
            margins.push(MarginRow {
                check: format!("exit(r={r})"),
                t,
                xi: Vec::new(),
                estimate: estimate.probability,
                std_error: estimate.std_error,
                bound: bound.clipped,
                margin: bound.clipped - estimate.probability,
                within: passed,
            });
            exit.push(ExitCheck { estimate, bound, passed });
        }
        checks.insert("exit_time".to_string(), exit.iter().all(|e| e.passed));
    }

    let passed = checks.values().all(|&b| b);
    let report = ValidationReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        config: cfg.clone(),
        ensemble: EnsembleInfo {
            source,
            n_paths: ens.n_paths,
            dimension: ens.dimension,
            n_times: ens.n_times(),
            scheme: ens.scheme,
        },
        char_bound,
        symmetrization,
        generator,
        occupation,
        exit,
        checks,
        passed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let file = std::io::BufWriter::new(std::fs::File::create(dir.join("margins.csv"))?);
    write_margins_csv(&margins, file)?;
    write_json(&dir.join("validation.json"), &report)?;
    Ok(report)
}
