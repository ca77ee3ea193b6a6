//! Envelopes, bounds and criteria built on a symbol.

pub mod bounds;
pub mod envelope;
pub mod fit;
pub mod horizon;
pub mod integrals;

use std::cell::RefCell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::quadrature::IntegralResult;
use crate::report::Verdict;
use crate::scalar::Scalar;

pub use bounds::{char_fn_bound, local_time_fourier_bound};
pub use envelope::{
    build_envelope, build_envelope_with, Envelope, EnvelopeMethod, EnvelopeValues, Provenance, StateDomain, TailBehavior,
    UserEnvelope,
};
pub use fit::{heat_exponent_fit, HeatExponentFit};
pub use horizon::{bump_constant, exit_time_bound, small_time_horizon, BumpSpec, ExitTimeBound, Horizons};
pub use integrals::{
    heat_kernel_sup_bound, occupation_bound, test_local_times, test_transience, test_ultracontractivity, BoundValue,
    UltracontractivityOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    Ultracontractivity,
    Transience,
    LocalTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    Integral { result: IntegralResult<f64>, rel_tol: f64, abs_tol: f64 },
    LimitTrace { trace: Vec<TracePoint>, threshold: f64, trend_window: usize },
}

/// Verdict of a criterion with its numeric evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: CriterionId,
    pub verdict: Verdict,
    pub evidence: Evidence,
    /// Conditions under which the verdict may be optimistic.
    pub caveats: Vec<String>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<serde_json::Value>,
    pub wall_time_seconds: f64,
}

impl CriterionReport {
    pub fn with_config_echo(mut self, echo: serde_json::Value) -> Self {
        self.config_echo = Some(echo);
        self
    }
}

pub(crate) const GRID_CAVEAT: &str =
    "envelope from a state grid over-estimates the infimum over all states; a 'holds' verdict may be optimistic";

pub(crate) fn finish_report(
    criterion: CriterionId,
    verdict: Verdict,
    evidence: Evidence,
    grid: bool,
    notes: Vec<String>,
    started: Instant,
) -> CriterionReport {
    let caveats = if grid && verdict == Verdict::Holds { vec![GRID_CAVEAT.to_string()] } else { Vec::new() };
    CriterionReport {
        criterion,
        verdict,
        evidence,
        caveats,
        notes,
        config_echo: None,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Runs a quadrature whose integrand may fail; the first failure is returned
/// instead of the quadrature result.
pub(crate) fn guarded<T, G, Q>(g: G, quad: Q) -> Result<IntegralResult<T>>
where
    T: Scalar,
    G: Fn(T) -> Result<T>,
    Q: FnOnce(&dyn Fn(T) -> T) -> IntegralResult<T>,
{
    let failure: RefCell<Option<FellerError>> = RefCell::new(None);
    let f = |r: T| match g(r) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::nan()
        }
    };
    let result = quad(&f);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(result),
    }
}
