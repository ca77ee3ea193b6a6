//! Experiment configuration (TOML, or the `config` object of a report.json).

use std::path::{Path, PathBuf};

use feller_core::criteria::{StateDomain, TailBehavior, UserEnvelope};
use feller_core::expr::Expr;
use feller_core::symbol::{symmetrize, StableLikeSpec, StateFn, SymbolModel};
use feller_core::{FellerError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Zero,
    Brownian,
    AlphaStable,
    CompoundPoisson,
    StableLike,
    Expression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub kind: SymbolKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// `brownian`: symbol `diffusion·|ξ|²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<f64>,
    /// `alpha_stable`: index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    /// `stable_like`: `α(x)` as an expression in `x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_upper: Option<f64>,
    #[serde(default = "yes")]
    pub smooth: bool,
    /// `expression`: real and imaginary parts in `x` and `ξ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<String>,
    #[serde(default = "yes")]
    pub conservative: bool,
    /// Replace the symbol by `2·Re p(x, ξ/2)`.
    #[serde(default)]
    pub symmetrize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailBehavior>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_inf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_sup: Option<String>,
    /// Force the grid construction even when a closed form is available.
    #[serde(default)]
    pub force_grid: bool,
}

fn default_resolution() -> usize {
    33
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { lower: None, upper: None, resolution: default_resolution(), tail: None, q_inf: None, q_sup: None, force_grid: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaConfig {
    #[serde(default)]
    pub ultracontractivity: bool,
    #[serde(default)]
    pub transience: bool,
    #[serde(default)]
    pub local_times: bool,
    #[serde(default)]
    pub heat_kernel: bool,
    #[serde(default)]
    pub occupation: bool,
    /// Radii of the ultracontractivity trend.
    #[serde(default = "default_xi_radii")]
    pub xi_radii: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_trend_window")]
    pub trend_window: usize,
    #[serde(default = "one")]
    pub transience_radius: f64,
    #[serde(default)]
    pub radial_shortcut: bool,
    /// Times of the heat-kernel curve and exponent fit.
    #[serde(default = "default_heat_t")]
    pub heat_t: Vec<f64>,
    #[serde(default = "one")]
    pub occupation_r: f64,
}

fn one() -> f64 {
    1.0
}
fn default_threshold() -> f64 {
    10.0
}
fn default_trend_window() -> usize {
    3
}
fn default_xi_radii() -> Vec<f64> {
    (1..=10).map(|k| 10f64.powi(k)).collect()
}
fn default_heat_t() -> Vec<f64> {
    feller_core::criteria::fit::default_heat_grid()
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self {
            ultracontractivity: false,
            transience: false,
            local_times: false,
            heat_kernel: false,
            occupation: false,
            xi_radii: default_xi_radii(),
            threshold: default_threshold(),
            trend_window: default_trend_window(),
            transience_radius: 1.0,
            radial_shortcut: false,
            heat_t: default_heat_t(),
            occupation_r: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n_paths: usize,
    /// Step size.
    pub h: f64,
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub decimation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
}

fn one_usize() -> usize {
    1
}
fn default_h_max() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// Existing FLPE file; otherwise the `simulation` section is run inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<PathBuf>,
    pub t_set: Vec<f64>,
    /// Frequencies; scalars are accepted in d = 1.
    pub xi_set: Vec<Frequency>,
    #[serde(default)]
    pub symmetrization: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_h: Option<Vec<f64>>,
    /// `(r, t)` pairs for the exit-time comparison.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exit: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupation: Option<OccupationConfig>,
    /// Radial bump profile `φ(s)` for the exit-time constant; the standard bump when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_profile: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationConfig {
    pub horizon: f64,
    pub h: f64,
    pub n_paths: usize,
    pub xi_set: Vec<Frequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Frequency {
    pub fn to_vec(&self, d: usize) -> Result<Vec<f64>> {
        let v = match self {
            Self::Scalar(x) if d == 1 => vec![*x],
            Self::Scalar(_) => return Err(FellerError::Config("scalar frequencies are only allowed in d = 1".into())),
            Self::Vector(v) => v.clone(),
        };
        if v.len() != d || v.iter().any(|c| !c.is_finite()) {
            return Err(FellerError::Config(format!("frequency {v:?} must have {d} finite coordinates")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    /// Required fraction of comparison points inside the 3σ envelope.
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
    /// Relative tolerance of the generator intercept against `p(x₀, ξ)`.
    #[serde(default = "default_generator_rel")]
    pub generator_rel: f64,
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_min_fraction() -> f64 {
    0.99
}
fn default_generator_rel() -> f64 {
    0.05
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            min_fraction: default_min_fraction(),
            generator_rel: default_generator_rel(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> FellerError {
    FellerError::Config(msg.into())
}

impl ExperimentConfig {
    /// Reads a TOML file, or the `config` member of a JSON report.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| config_err(format!("invalid JSON: {e}")))?;
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner).map_err(|e| config_err(format!("invalid config: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.symbol;
        if !(1..=3).contains(&s.dimension) {
            return Err(config_err("symbol.dimension must be 1, 2 or 3"));
        }
        let e = &self.envelope;
        if !(3..=1025).contains(&e.resolution) {
            return Err(config_err("envelope.resolution must lie in 3..=1025"));
        }
        let c = &self.criteria;
        if c.xi_radii.is_empty() || c.xi_radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(config_err("criteria.xi_radii must be positive and finite"));
        }
        if !(c.transience_radius > 0.0) || !(c.occupation_r > 0.0) || c.trend_window < 2 {
            return Err(config_err("criteria radii must be positive and trend_window at least 2"));
        }
        if c.heat_t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(config_err("criteria.heat_t must hold positive times"));
        }
        let t = &self.tolerances;
        if !(t.rel_tol > 0.0 && t.rel_tol < 1.0) || !(t.abs_tol >= 0.0) || !(t.min_fraction > 0.0 && t.min_fraction <= 1.0)
            || !(t.generator_rel > 0.0)
        {
            return Err(config_err("tolerances out of range"));
        }
        if let Some(sim) = &self.simulation {
            sim.validate(s.dimension)?;
        }
        if let Some(v) = &self.validation {
            if v.t_set.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(config_err("validation.t_set must hold nonnegative times"));
            }
            for xi in &v.xi_set {
                xi.to_vec(s.dimension)?;
            }
            if v.ensemble.is_none() && self.simulation.is_none() {
                return Err(config_err("validation needs an ensemble file or a simulation section"));
            }
            if v.ensemble.is_none() || v.symmetrization || v.occupation.is_some() {
                self.require_seed()?;
            }
            if let Some(o) = &v.occupation {
                if !(o.horizon > 0.0 && o.h > 0.0 && o.n_paths > 0) {
                    return Err(config_err("validation.occupation needs positive horizon, h and n_paths"));
                }
                for xi in &o.xi_set {
                    xi.to_vec(s.dimension)?;
                }
            }
            for [r, t] in &v.exit {
                if !(*r > 0.0 && *t > 0.0) {
                    return Err(config_err("validation.exit pairs need r > 0 and t > 0"));
                }
            }
        }
        Ok(())
    }

    /// Seed of the simulation section; a missing seed is a configuration error.
    pub fn require_seed(&self) -> Result<u64> {
        self.simulation
            .as_ref()
            .ok_or_else(|| config_err("a [simulation] section is required"))?
            .seed
            .ok_or_else(|| config_err("simulation.seed is required whenever paths are simulated"))
    }

    /// The declared model, symmetrized when `symbol.symmetrize` is set.
    pub fn build_model(&self) -> Result<SymbolModel<f64>> {
        let base = self.base_model()?;
        Ok(if self.symbol.symmetrize { symmetrize(base) } else { base })
    }

    /// The declared model before symmetrization.
    pub fn base_model(&self) -> Result<SymbolModel<f64>> {
        let s = &self.symbol;
        let d = s.dimension;
        let need = |v: Option<f64>, field: &str| v.ok_or_else(|| config_err(format!("symbol.{field} is required for this kind")));
        let parse = |src: &Option<String>, field: &str| -> Result<Expr> {
            Expr::parse(src.as_deref().ok_or_else(|| config_err(format!("symbol.{field} is required for this kind")))?)
        };
        let mut model = match s.kind {
            SymbolKind::Zero => SymbolModel::zero(d),
            SymbolKind::Brownian => SymbolModel::brownian(d, need(s.diffusion, "diffusion")?),
            SymbolKind::AlphaStable => SymbolModel::alpha_stable(d, need(s.alpha, "alpha")?, s.scale.unwrap_or(1.0)),
            SymbolKind::CompoundPoisson => SymbolModel::compound_poisson(d, need(s.rate, "rate")?, need(s.jump_std, "jump_std")?),
            SymbolKind::StableLike => {
                let alpha = StateFn::from_expr(parse(&s.alpha_expr, "alpha_expr")?);
                let spec = StableLikeSpec::new(d, alpha, need(s.alpha_lower, "alpha_lower")?, need(s.alpha_upper, "alpha_upper")?, s.smooth)?;
                SymbolModel::stable_like(s.name.clone().unwrap_or_else(|| "stable_like".into()), spec)
            }
            SymbolKind::Expression => SymbolModel::expression(
                s.name.clone().unwrap_or_else(|| "expression".into()),
                d,
                parse(&s.re, "re")?,
                s.im.as_deref().map(Expr::parse).transpose()?,
                s.conservative,
            )?,
        };
        if let Some(b) = &s.drift {
            model = model.with_drift(b.clone())?;
        }
        if let Some(name) = &s.name {
            model.name = name.clone();
        }
        Ok(model)
    }

    pub fn state_domain(&self) -> Result<StateDomain<f64>> {
        let e = &self.envelope;
        let d = self.symbol.dimension;
        let mut domain = match (&e.lower, &e.upper) {
            (Some(l), Some(u)) => StateDomain::new(l.clone(), u.clone(), e.tail),
            (None, None) if e.tail == Some(TailBehavior::Periodic) => StateDomain::periodic(d),
            (None, None) => StateDomain::new(Vec::new(), Vec::new(), e.tail),
            _ => return Err(config_err("envelope.lower and envelope.upper must be given together")),
        };
        if let (Some(qi), Some(qs)) = (&e.q_inf, &e.q_sup) {
            domain = domain.with_user_envelope(UserEnvelope {
                q_inf: Expr::parse(qi)?,
                q_sup: Expr::parse(qs)?,
                im_sup: None,
                re_sup: None,
            });
        } else if e.tail == Some(TailBehavior::UserEnvelope) {
            return Err(config_err("tail = user_envelope needs envelope.q_inf and envelope.q_sup"));
        }
        Ok(domain)
    }

    pub fn x0(&self) -> Vec<f64> {
        self.simulation
            .as_ref()
            .and_then(|s| s.x0.clone())
            .unwrap_or_else(|| vec![0.0; self.symbol.dimension])
    }
}

impl SimulationConfig {
    fn validate(&self, d: usize) -> Result<()> {
        if !(1..=10_000_000).contains(&self.n_paths) {
            return Err(config_err("simulation.n_paths must lie in 1..=1e7"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) || !(self.h_max > 0.0) {
            return Err(config_err("simulation.h and h_max must be positive"));
        }
        if self.steps == 0 || self.decimation == 0 || self.steps % self.decimation != 0 {
            return Err(config_err("simulation.steps must be positive and divisible by decimation"));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(config_err("simulation.x0 must have the symbol's dimension"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[symbol]\nkind = \"alpha_stable\"\ndimension = 1\nalpha = 1.5\n";

    #[test]
    fn defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.envelope.resolution, 33);
        assert_eq!(c.criteria.xi_radii.len(), 10);
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(c.simulation.is_none());
        assert_eq!(c.x0(), vec![0.0]);
    }

    #[test]
    fn json_report_and_bare_json_are_accepted() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let bare = serde_json::to_string(&c).unwrap();
        let wrapped = serde_json::json!({ "toolkit_version": "0", "config": c }).to_string();
        assert_eq!(ExperimentConfig::parse(&bare).unwrap(), c);
        assert_eq!(ExperimentConfig::parse(&wrapped).unwrap(), c);
    }

    #[test]
    fn frequencies() {
        assert_eq!(Frequency::Scalar(2.0).to_vec(1).unwrap(), vec![2.0]);
        assert!(Frequency::Scalar(2.0).to_vec(2).is_err());
        assert!(Frequency::Vector(vec![1.0]).to_vec(2).is_err());
        assert!(Frequency::Vector(vec![1.0, f64::NAN]).to_vec(2).is_err());
    }

    #[test]
    fn rejects_out_of_range_settings() {
        let bad = [
            MINIMAL.replace("dimension = 1", "dimension = 0"),
            format!("{MINIMAL}[envelope]\nresolution = 2\n"),
            format!("{MINIMAL}[criteria]\nxi_radii = [1.0, -2.0]\n"),
            format!("{MINIMAL}[tolerances]\nrel_tol = 2.0\n"),
            format!("{MINIMAL}[simulation]\nseed = 1\nn_paths = 10\nh = 0.1\nsteps = 10\ndecimation = 3\n"),
            format!("{MINIMAL}[simulation]\nn_paths = 10\nh = 0.1\nsteps = 10\n[validation]\nt_set = [1.0]\nxi_set = [1.0]\n"),
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::parse(&text), Err(FellerError::Config(_))), "{text}");
        }
    }

    #[test]
    fn builds_each_kind() {
        let cases = [
            ("zero", ""),
            ("brownian", "diffusion = 1.0\n"),
            ("alpha_stable", "alpha = 1.0\nscale = 2.0\ndrift = [0.5]\n"),
            ("compound_poisson", "rate = 2.0\njump_std = 1.0\n"),
            ("stable_like", "alpha_expr = \"1.5 + 0.3*sin(x)\"\nalpha_lower = 1.2\nalpha_upper = 1.8\n"),
            ("expression", "re = \"(2 + cos(x))*xi^2\"\nim = \"sin(x)*xi\"\n"),
        ];
        for (kind, extra) in cases {
            let text = format!("[symbol]\nkind = \"{kind}\"\ndimension = 1\n{extra}");
            let m = ExperimentConfig::parse(&text).unwrap().build_model().unwrap();
            assert_eq!(m.dimension(), 1, "{kind}");
        }
        let missing = ExperimentConfig::parse("[symbol]\nkind = \"brownian\"\ndimension = 1\n").unwrap();
        assert!(missing.build_model().is_err());
    }

    #[test]
    fn symmetrize_flag_wraps_the_model() {
        let c = ExperimentConfig::parse(&format!("{MINIMAL}symmetrize = true\n")).unwrap();
        let v = c.build_model().unwrap().eval(&[0.0], &[2.0]).unwrap();
        assert!((v.re - 2f64.powf(-0.5) * 2f64.powf(1.5)).abs() < 1e-12);
        assert!(c.base_model().unwrap().stable_like_spec().is_none());
    }

    #[test]
    fn state_domain_forms() {
        let periodic = format!("{MINIMAL}[envelope]\ntail = \"periodic\"\n");
        let d = ExperimentConfig::parse(&periodic).unwrap().state_domain().unwrap();
        assert_eq!(d.lower.len(), 1);
        let half = format!("{MINIMAL}[envelope]\nlower = [0.0]\n");
        assert!(ExperimentConfig::parse(&half).unwrap().state_domain().is_err());
        let user = format!("{MINIMAL}[envelope]\nq_inf = \"norm_xi^1.5\"\nq_sup = \"norm_xi^1.5\"\n");
        assert!(ExperimentConfig::parse(&user).unwrap().state_domain().unwrap().user.is_some());
    }
}
