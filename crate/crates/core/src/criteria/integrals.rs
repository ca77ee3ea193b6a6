//! The integral criteria and the heat-kernel and occupation bounds.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::quadrature::{classify_improper, Classification, IntegralResult, QuadOptions, Region};
use crate::report::Verdict;
use crate::scalar::Scalar;

use super::envelope::Envelope;
use super::{finish_report, guarded, CriterionId, CriterionReport, Evidence, TracePoint};

/// A bound that may be `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue<T> {
    /// Meaningful only when `infinite` is false.
    pub value: T,
    pub infinite: bool,
    pub integral: IntegralResult<T>,
}

impl<T: Scalar> BoundValue<T> {
    pub fn finite(&self) -> Option<T> {
        (!self.infinite).then_some(self.value)
    }
}

/// `r ↦ mean_u g(q_inf(r·u))` over the envelope's direction set, scaled by `scale` in ξ.
fn profile<'a, T: Scalar, G: Fn(T) -> T + 'a>(
    env: &'a Envelope<T>,
    dirs: &'a [Vec<T>],
    scale: T,
    g: G,
) -> impl Fn(T) -> Result<T> + 'a {
    move |r: T| {
        let mut acc = T::zero();
        let mut xi = vec![T::zero(); env.dimension()];
        for u in dirs {
            for (c, &v) in xi.iter_mut().zip(u) {
                *c = scale * r * v;
            }
            acc += g(env.q_inf(&xi)?);
        }
        Ok(acc / T::from_usize_lossy(dirs.len()))
    }
}

fn integrate_profile<T: Scalar, G: Fn(T) -> T>(
    env: &Envelope<T>,
    scale: T,
    g: G,
    region: Region<T>,
    opts: &QuadOptions<T>,
) -> Result<IntegralResult<T>> {
    let dirs = env.directions();
    let prof = profile(env, &dirs, scale, g);
    guarded(prof, |f| classify_improper(f, env.dimension(), region, opts))
}

fn to_bound<T: Scalar>(integral: IntegralResult<T>, factor: T, what: &str) -> Result<BoundValue<T>> {
    match integral.classification {
        Classification::Convergent => {
            Ok(BoundValue { value: integral.value * factor, infinite: false, integral })
        }
        Classification::DivergentAtZero | Classification::DivergentAtInfinity => {
            Ok(BoundValue { value: T::infinity(), infinite: true, integral })
        }
        Classification::Undetermined => Err(FellerError::Numerical {
            message: format!("{what}: {}", integral.note.clone().unwrap_or_else(|| "undetermined integral".into())),
            error_estimate: integral.abs_error_estimate.to_f64_lossy(),
        }),
    }
}

/// `(4π)^{−d} ∫ exp(−(t/16)·q_inf(ξ)) dξ`.
pub fn heat_kernel_sup_bound<T: Scalar>(env: &Envelope<T>, t: T, opts: &QuadOptions<T>) -> Result<BoundValue<T>> {
    if !(t > T::zero()) {
        return Err(FellerError::domain(format!("time {t} must be positive")));
    }
    let c = t / T::lit(16.0);
    let integral = integrate_profile(env, T::one(), |q| (-c * q).exp(), Region::Whole, opts)?;
    let d = env.dimension() as i32;
    let factor = (T::lit(4.0) * T::PI()).powi(-d);
    to_bound(integral, factor, "heat kernel bound")
}

/// `4^{d+2}/(πr)^d · ∫_{|ξ| ≤ 2r√d} dξ / q_inf(2ξ)`.
pub fn occupation_bound<T: Scalar>(env: &Envelope<T>, r: T, opts: &QuadOptions<T>) -> Result<BoundValue<T>> {
    if !(r > T::zero()) {
        return Err(FellerError::domain(format!("radius {r} must be positive")));
    }
    let d = env.dimension();
    let radius = T::lit(2.0) * r * T::from_usize_lossy(d).sqrt();
    let integral = integrate_profile(env, T::lit(2.0), |q| T::one() / q, Region::Ball(radius), opts)?;
    let factor = T::lit(4.0).powi(d as i32 + 2) / (T::PI() * r).powi(d as i32);
    to_bound(integral, factor, "occupation bound")
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UltracontractivityOptions {
    /// `m_k` must exceed this value at the last radius.
    pub threshold: f64,
    /// `m_k` must increase across this many trailing radii.
    pub trend_window: usize,
}

impl Default for UltracontractivityOptions {
    fn default() -> Self {
        Self { threshold: 10.0, trend_window: 3 }
    }
}

/// Monotone-trend test of `q_inf(ξ)/log(1 + |ξ|) → ∞`.
pub fn test_ultracontractivity<T: Scalar>(
    env: &Envelope<T>,
    xi_radii: &[T],
    opts: &UltracontractivityOptions,
) -> Result<CriterionReport> {
    let started = Instant::now();
    if xi_radii.windows(2).any(|w| !(w[0] < w[1])) || xi_radii.is_empty() {
        return Err(FellerError::precondition("radii must be nonempty and strictly increasing"));
    }
    let mut trace = Vec::with_capacity(xi_radii.len());
    for &r in xi_radii {
        let m = env.q_inf_min_on_sphere(r)? / (T::one() + r).ln();
        trace.push(TracePoint { radius: r.to_f64_lossy(), value: m.to_f64_lossy() });
    }
    let w = opts.trend_window.max(2).min(trace.len());
    let tail = &trace[trace.len() - w..];
    let increasing = tail.windows(2).all(|p| p[1].value > p[0].value);
    let last = trace.last().map_or(f64::NAN, |p| p.value);
    let verdict = if trace.len() >= 2 && increasing && last > opts.threshold { Verdict::Holds } else { Verdict::Inconclusive };
    let notes = vec!["the limit condition is tested by a monotone-trend heuristic; failure is never claimed".to_string()];
    Ok(finish_report(
        CriterionId::Ultracontractivity,
        verdict,
        Evidence::LimitTrace { trace, threshold: opts.threshold, trend_window: w },
        env.is_grid(),
        notes,
        started,
    ))
}

/// Classifies `∫_{|ξ| ≤ r} dξ / q_inf(ξ)`; convergence means transience.
pub fn test_transience<T: Scalar>(
    env: &Envelope<T>,
    r: T,
    radial_shortcut: bool,
    opts: &QuadOptions<T>,
) -> Result<CriterionReport> {
    let started = Instant::now();
    if !(r > T::zero()) {
        return Err(FellerError::domain(format!("radius {r} must be positive")));
    }
    let integral = integrate_profile(env, T::one(), |q| T::one() / q, Region::Ball(r), opts)?;
    let verdict = if integral.is_convergent() { Verdict::Holds } else { Verdict::Inconclusive };
    let mut notes = Vec::new();
    if radial_shortcut {
        notes.push("radial envelopes with unbounded real part declared: a single radius suffices".to_string());
    } else {
        notes.push(format!(
            "the criterion requires convergence for every r > 0; evaluated at r = {r}, and convergence near 0 does not depend on r"
        ));
    }
    if integral.classification == Classification::DivergentAtZero {
        notes.push("divergence at the origin does not imply recurrence".to_string());
    }
    Ok(finish_report(
        CriterionId::Transience,
        verdict,
        integral_evidence(&integral, opts),
        env.is_grid(),
        notes,
        started,
    ))
}

/// Classifies `∫ dξ / (1 + q_inf(ξ))`; convergence means local times exist.
pub fn test_local_times<T: Scalar>(env: &Envelope<T>, opts: &QuadOptions<T>) -> Result<CriterionReport> {
    let started = Instant::now();
    let integral = integrate_profile(env, T::one(), |q| T::one() / (T::one() + q), Region::Whole, opts)?;
    let verdict = if integral.is_convergent() { Verdict::Holds } else { Verdict::Inconclusive };
    Ok(finish_report(
        CriterionId::LocalTimes,
        verdict,
        integral_evidence(&integral, opts),
        env.is_grid(),
        Vec::new(),
        started,
    ))
}

fn integral_evidence<T: Scalar>(integral: &IntegralResult<T>, opts: &QuadOptions<T>) -> Evidence {
    Evidence::Integral {
        result: integral.to_f64(),
        rel_tol: opts.rel_tol.to_f64_lossy(),
        abs_tol: opts.abs_tol.to_f64_lossy(),
    }
}
