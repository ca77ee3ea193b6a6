use std::io::Write;
use std::path::Path;
use std::time::Instant;

use feller_core::criteria::{
    build_envelope_with, heat_exponent_fit, heat_kernel_sup_bound, occupation_bound, test_local_times, test_transience,
    test_ultracontractivity, BoundValue, CriterionReport, Envelope, EnvelopeMethod, HeatExponentFit, Provenance,
    UltracontractivityOptions,
};
use feller_core::quadrature::QuadOptions;
use feller_core::symbol::{KindTag, Probe, SymbolModel};
use feller_core::{FellerError, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{ensure_dir, write_json, TOOLKIT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub kind: KindTag,
    pub dimension: usize,
    pub conservative: bool,
    pub depends_on_state: bool,
    /// Structural and sampled checks passed.
    pub validated: bool,
    pub envelope: Provenance,
    pub radial_envelope: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatPoint {
    pub t: f64,
    /// `None` when the bound is infinite.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub model: ModelInfo,
    pub criteria: Vec<CriterionReport>,
    pub heat_curve: Vec<HeatPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_fit: Option<HeatExponentFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation_bound: Option<BoundValue<f64>>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

pub(crate) fn quad_options(cfg: &ExperimentConfig) -> QuadOptions<f64> {
    QuadOptions::with_tolerance(cfg.tolerances.rel_tol, cfg.tolerances.abs_tol)
}

pub(crate) fn build_envelope(cfg: &ExperimentConfig, model: &SymbolModel<f64>) -> Result<Envelope<f64>> {
    let method = if cfg.envelope.force_grid { EnvelopeMethod::Grid } else { EnvelopeMethod::Auto };
    build_envelope_with(model, &cfg.state_domain()?, cfg.envelope.resolution, method)
}

/// Validates the model, runs the enabled criteria and bounds, and writes
/// `report.json` and `curves.csv` into the output directory.
pub fn run_analyze(cfg: &ExperimentConfig) -> Result<AnalysisReport> {
    let started = Instant::now();
    cfg.validate()?;
    let model = cfg.build_model()?;
    model.validate(&Probe::default_for(model.dimension()))?;
    let env = build_envelope(cfg, &model)?;
    let opts = quad_options(cfg);
    let c = &cfg.criteria;

    let mut criteria = Vec::new();
    if c.ultracontractivity {
        if c.xi_radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FellerError::Config("criteria.xi_radii must be strictly increasing".into()));
        }
        let uo = UltracontractivityOptions { threshold: c.threshold, trend_window: c.trend_window };
        criteria.push(test_ultracontractivity(&env, &c.xi_radii, &uo)?);
    }
    if c.transience {
        criteria.push(test_transience(&env, c.transience_radius, c.radial_shortcut, &opts)?);
    }
    if c.local_times {
        criteria.push(test_local_times(&env, &opts)?);
    }
    let echo = serde_json::to_value(cfg)?;
    let criteria: Vec<CriterionReport> = criteria.into_iter().map(|r| r.with_config_echo(echo.clone())).collect();

    let mut notes = Vec::new();
    let mut heat_curve = Vec::new();
    let mut heat_fit = None;
    if c.heat_kernel {
        for &t in &c.heat_t {
            let b = heat_kernel_sup_bound(&env, t, &opts)?;
            heat_curve.push(HeatPoint { t, bound: b.finite() });
        }
        match heat_exponent_fit(&env, &c.heat_t, &opts) {
            Ok(fit) => heat_fit = Some(fit),
            Err(FellerError::Precondition(msg)) => notes.push(format!("heat exponent fit skipped: {msg}")),
            Err(e) => return Err(e),
        }
    }
    let occupation = if c.occupation { Some(occupation_bound(&env, c.occupation_r, &opts)?) } else { None };

    let report = AnalysisReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        config: cfg.clone(),
        model: ModelInfo {
            name: model.name.clone(),
            kind: model.kind_tag(),
            dimension: model.dimension(),
            conservative: model.is_conservative(),
            depends_on_state: model.depends_on_state(),
            validated: true,
            envelope: env.provenance().clone(),
            radial_envelope: env.is_radial(),
        },
        criteria,
        heat_curve,
        heat_fit,
        occupation_bound: occupation,
        notes,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_json(&dir.join("report.json"), &report)?;
    write_curves(&dir.join("curves.csv"), &report)?;
    Ok(report)
}

/// Long format: `curve,x,value`.
fn write_curves(path: &Path, report: &AnalysisReport) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "curve,x,value")?;
    for p in &report.heat_curve {
        let v = p.bound.map_or("inf".to_string(), |b| b.to_string());
        writeln!(w, "heat_kernel_bound,{},{}", p.t, v)?;
    }
    for r in &report.criteria {
        if let feller_core::criteria::Evidence::LimitTrace { trace, .. } = &r.evidence {
            for p in trace {
                writeln!(w, "ultracontractivity_trace,{},{}", p.radius, p.value)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
