//! Power-law exponents of the heat-kernel bound.

use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::grid::log_space;
use crate::quadrature::QuadOptions;
use crate::scalar::{linear_fit, Scalar};

use super::envelope::Envelope;
use super::integrals::heat_kernel_sup_bound;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatExponentFit {
    /// Slope of `log bound` against `log t` over `t ≤ 0.01`.
    pub small_t_slope: f64,
    /// Slope over `t ≥ 100`.
    pub large_t_slope: f64,
    /// `(t, bound)` pairs used by the fits.
    pub points: Vec<(f64, f64)>,
}

/// `logspace(1e-4, 1e-2, 9) ∪ logspace(1e2, 1e4, 9)`.
pub fn default_heat_grid() -> Vec<f64> {
    let mut t = log_space(1e-4, 1e-2, 9);
    t.extend(log_space(1e2, 1e4, 9));
    t
}

pub fn heat_exponent_fit<T: Scalar>(env: &Envelope<T>, t_grid: &[f64], opts: &QuadOptions<T>) -> Result<HeatExponentFit> {
    let small: Vec<f64> = t_grid.iter().copied().filter(|&t| t > 0.0 && t <= 0.01 * (1.0 + 1e-9)).collect();
    let large: Vec<f64> = t_grid.iter().copied().filter(|&t| t >= 100.0 * (1.0 - 1e-9)).collect();
    for (side, ts) in [("small", &small), ("large", &large)] {
        let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ts.iter().copied().fold(0.0, f64::max);
        if ts.len() < 3 || hi / lo < 100.0 * (1.0 - 1e-9) {
            return Err(FellerError::precondition(format!(
                "{side}-t part of the grid must hold at least 3 points spanning 2 decades"
            )));
        }
    }
    let mut points = Vec::with_capacity(small.len() + large.len());
    for &t in small.iter().chain(&large) {
        let b = heat_kernel_sup_bound(env, T::lit(t), opts)?;
        let Some(v) = b.finite() else {
            return Err(FellerError::Numerical {
                message: format!("heat kernel bound diverges at t = {t}"),
                error_estimate: f64::INFINITY,
            });
        };
        points.push((t, v.to_f64_lossy()));
    }
    let slope = |range: std::ops::Range<usize>| -> Result<f64> {
        let x: Vec<f64> = points[range.clone()].iter().map(|p| p.0.ln()).collect();
        let y: Vec<f64> = points[range].iter().map(|p| p.1.ln()).collect();
        linear_fit(&x, &y)
            .map(|(s, _)| s)
            .ok_or_else(|| FellerError::Numerical { message: "degenerate exponent fit".into(), error_estimate: f64::NAN })
    };
    let n = small.len();
    Ok(HeatExponentFit { small_t_slope: slope(0..n)?, large_t_slope: slope(n..points.len())?, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::envelope::{build_envelope, StateDomain};
    use crate::expr::Expr;
    use crate::symbol::{StableLikeSpec, StateFn, SymbolModel};

    #[test]
    fn stable_like_exponents() {
        let alpha = StateFn::from_expr(Expr::parse("1.5 + 0.3*sin(x)").unwrap());
        let m = SymbolModel::stable_like("s", StableLikeSpec::new(1, alpha, 1.2, 1.8, true).unwrap());
        let env = build_envelope(&m, &StateDomain::periodic(1), 9).unwrap();
        let fit = heat_exponent_fit(&env, &default_heat_grid(), &QuadOptions::default()).unwrap();
        assert!((fit.small_t_slope / (-1.0 / 1.2) - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.large_t_slope / (-1.0 / 1.8) - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn closed_form_exponents() {
        let dom = StateDomain::new(vec![], vec![], None);
        let b = build_envelope(&SymbolModel::brownian(2, 1.0), &dom, 3).unwrap();
        let fit = heat_exponent_fit(&b, &default_heat_grid(), &QuadOptions::default()).unwrap();
        assert!((fit.small_t_slope + 1.0).abs() < 1e-6 && (fit.large_t_slope + 1.0).abs() < 1e-6);
        let c = build_envelope(&SymbolModel::alpha_stable(1, 1.0, 1.0), &dom, 3).unwrap();
        let fit = heat_exponent_fit(&c, &default_heat_grid(), &QuadOptions::default()).unwrap();
        assert!((fit.small_t_slope + 1.0).abs() < 1e-6 && (fit.large_t_slope + 1.0).abs() < 1e-6);
    }

    #[test]
    fn short_grid_rejected() {
        let dom = StateDomain::new(vec![], vec![], None);
        let b = build_envelope(&SymbolModel::brownian(1, 1.0), &dom, 3).unwrap();
        assert!(heat_exponent_fit(&b, &[1e-3, 1e-2, 100.0, 1e4], &QuadOptions::default()).is_err());
    }
}
