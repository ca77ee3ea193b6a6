//! Structural checks on symbols over finite sampling grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{ball_points, check_directions, frequency_points};
use crate::report::Verdict;
use crate::scalar::{norm, Scalar};

use super::SymbolModel;

#[derive(Debug, Clone, Serialize)]
pub struct BoundedCoefficientsReport {
    /// `sup |p(x, ξ)| / (1 + |ξ|²)` over the full grid.
    pub c_est: f64,
    /// `max |p(x, 0)|` over the state grid.
    pub max_at_zero: f64,
    /// `(R, c_est restricted to |ξ| ≤ R)` for halving radii, smallest first.
    pub growth_trace: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Estimates the constant in `|p(x, ξ)| ≤ c(1 + |ξ|²)` and checks `p(x, 0) = 0`.
pub fn check_bounded_coefficients<T: Scalar>(
    model: &SymbolModel<T>,
    x_grid: &[Vec<T>],
    xi_grid: &[Vec<T>],
) -> Result<BoundedCoefficientsReport> {
    let zero = vec![T::zero(); model.dimension()];
    let mut max_at_zero = 0.0f64;
    let mut per_xi: Vec<(f64, f64)> = Vec::with_capacity(xi_grid.len());
    for x in x_grid {
        max_at_zero = max_at_zero.max(model.eval(x, &zero)?.norm().to_f64_lossy());
    }
    for xi in xi_grid {
        let r = norm(xi).to_f64_lossy();
        let mut sup = 0.0f64;
        for x in x_grid {
            sup = sup.max(model.eval(x, xi)?.norm().to_f64_lossy());
        }
        per_xi.push((r, sup / (1.0 + r * r)));
    }
    let c_est = per_xi.iter().map(|p| p.1).fold(0.0, f64::max);
    let r_max = per_xi.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut growth_trace = Vec::new();
    for j in (0..5).rev() {
        let radius = r_max / f64::powi(2.0, j);
        let c = per_xi.iter().filter(|p| p.0 <= radius * (1.0 + 1e-12)).map(|p| p.1).fold(0.0, f64::max);
        growth_trace.push((radius, c));
    }
    let tol = model.tolerance(T::zero()).to_f64_lossy().max(1e-12);
    let n = growth_trace.len();
    let last_ratio = if growth_trace[n - 2].1 > 0.0 { growth_trace[n - 1].1 / growth_trace[n - 2].1 } else { 1.0 };
    let monotone = growth_trace.windows(2).all(|w| w[1].1 >= w[0].1);
    let verdict = if max_at_zero > tol || !c_est.is_finite() {
        Verdict::Fails
    } else if monotone && last_ratio > 1.5 {
        // Still growing at the edge of the grid.
        if r_max >= 10.0 {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    } else {
        Verdict::Holds
    };
    Ok(BoundedCoefficientsReport { c_est, max_at_zero, growth_trace, verdict })
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorReport {
    pub c: f64,
    pub verdict: Verdict,
    /// Frequency where `inf_x Re p = 0` while `Im p ≠ 0`.
    pub witness: Option<Vec<f64>>,
}

/// `c = max_ξ sup_x |Im p(x, ξ)| / inf_x Re p(x, ξ)`; holds iff `c < 1`.
pub fn check_sector_condition<T: Scalar>(
    model: &SymbolModel<T>,
    x_grid: &[Vec<T>],
    xi_grid: &[Vec<T>],
) -> Result<SectorReport> {
    let mut c = 0.0f64;
    for xi in xi_grid {
        if norm(xi) == T::zero() {
            continue;
        }
        let mut im_sup = 0.0f64;
        let mut re_inf = f64::INFINITY;
        for x in x_grid {
            let p = model.eval(x, xi)?;
            im_sup = im_sup.max(p.im.abs().to_f64_lossy());
            re_inf = re_inf.min(p.re.to_f64_lossy());
        }
        if im_sup == 0.0 {
            continue;
        }
        if re_inf <= 0.0 {
            return Ok(SectorReport {
                c: f64::INFINITY,
                verdict: Verdict::Fails,
                witness: Some(xi.iter().map(|v| v.to_f64_lossy()).collect()),
            });
        }
        c = c.max(im_sup / re_inf);
    }
    let verdict = if c < 1.0 { Verdict::Holds } else { Verdict::Fails };
    Ok(SectorReport { c, verdict, witness: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct FellerDecayReport {
    /// `(r_k, s_k)` with `s_k = sup_{|x|≤r_k} sup_{|ξ|≤1/r_k} |p(x, ξ)|`.
    pub trace: Vec<(f64, f64)>,
    pub tol: f64,
    pub verdict: Verdict,
}

/// Samples `s_k` over growing state balls and shrinking frequency balls.
///
/// Holds when the last `s_k` is below `tol`; fails when the trace has levelled
/// off (log-log slope above −0.05) at a positive value; inconclusive otherwise.
pub fn check_feller_decay<T: Scalar>(
    model: &SymbolModel<T>,
    radii: &[T],
    tol: T,
    x_resolution: usize,
) -> Result<FellerDecayReport> {
    let d = model.dimension();
    let mut trace = Vec::with_capacity(radii.len());
    for &r in radii {
        let xs = ball_points(d, r, x_resolution);
        let rho: Vec<T> = (1..=8).map(|j| T::from_usize_lossy(j) / (T::lit(8.0) * r)).collect();
        let xis = frequency_points(d, &rho, check_directions(d));
        let mut s = 0.0f64;
        for x in &xs {
            for xi in &xis {
                s = s.max(model.eval(x, xi)?.norm().to_f64_lossy());
            }
        }
        trace.push((r.to_f64_lossy(), s));
    }
    let tol = tol.to_f64_lossy();
    let verdict = match trace.as_slice() {
        [] => Verdict::Inconclusive,
        [.., (_, s)] if *s <= tol => Verdict::Holds,
        [.., (r0, s0), (r1, s1)] => {
            let slope = (s1 / s0).ln() / (r1 / r0).ln();
            if slope > -0.05 {
                Verdict::Fails
            } else {
                Verdict::Inconclusive
            }
        }
        _ => Verdict::Inconclusive,
    };
    Ok(FellerDecayReport { trace, tol, verdict })
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    /// `√Re p(x, ξ₁+ξ₂)`
    pub lhs: f64,
    /// `√Re p(x, ξ₁) + √Re p(x, ξ₂)`
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubadditivityReport {
    pub samples: usize,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
}

/// Where [`check_sqrt_subadditivity`] draws its samples.
#[derive(Debug, Clone)]
pub struct SubadditivitySampling<T> {
    pub x_lower: Vec<T>,
    pub x_upper: Vec<T>,
    /// Frequencies have log-uniform norms in `[min_radius, max_radius]`.
    pub min_radius: T,
    pub max_radius: T,
}

impl<T: Scalar> SubadditivitySampling<T> {
    pub fn default_for(d: usize) -> Self {
        Self {
            x_lower: vec![T::lit(-5.0); d],
            x_upper: vec![T::lit(5.0); d],
            min_radius: T::lit(1e-2),
            max_radius: T::lit(1e2),
        }
    }
}

/// Random search for a violation of `√Re p(x, ξ₁+ξ₂) ≤ √Re p(x, ξ₁) + √Re p(x, ξ₂)`.
pub fn check_sqrt_subadditivity<T: Scalar>(
    model: &SymbolModel<T>,
    sample_count: usize,
    rng_seed: u64,
) -> Result<SubadditivityReport> {
    check_sqrt_subadditivity_with(model, sample_count, rng_seed, &SubadditivitySampling::default_for(model.dimension()))
}

pub fn check_sqrt_subadditivity_with<T: Scalar>(
    model: &SymbolModel<T>,
    sample_count: usize,
    rng_seed: u64,
    sampling: &SubadditivitySampling<T>,
) -> Result<SubadditivityReport> {
    let d = model.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (lo, hi) = (sampling.min_radius.to_f64_lossy().ln(), sampling.max_radius.to_f64_lossy().ln());
    let frequency = |rng: &mut ChaCha8Rng| -> Vec<T> {
        let r = rng.random_range(lo..=hi).exp();
        let mut u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        if d == 1 {
            u[0] = u[0].signum();
        } else {
            u.iter_mut().for_each(|v| *v /= n);
        }
        u.into_iter().map(|v| T::lit(r * v)).collect()
    };
    for _ in 0..sample_count {
        let x: Vec<T> = sampling
            .x_lower
            .iter()
            .zip(&sampling.x_upper)
            .map(|(&a, &b)| a + (b - a) * T::lit(rng.random::<f64>()))
            .collect();
        let xi1 = frequency(&mut rng);
        let xi2 = frequency(&mut rng);
        let sum: Vec<T> = xi1.iter().zip(&xi2).map(|(&a, &b)| a + b).collect();
        let root = |xi: &[T]| -> Result<f64> { Ok(model.eval_re(&x, xi)?.max(T::zero()).sqrt().to_f64_lossy()) };
        let lhs = root(&sum)?;
        let rhs = root(&xi1)? + root(&xi2)?;
        let tol = 1e-9 * (1.0 + rhs) + model.tolerance(T::lit(rhs * rhs)).to_f64_lossy().sqrt();
        if lhs > rhs + tol {
            let f = |v: &[T]| v.iter().map(|c| c.to_f64_lossy()).collect::<Vec<f64>>();
            return Ok(SubadditivityReport {
                samples: sample_count,
                verdict: Verdict::Fails,
                counterexample: Some(Counterexample { x: f(&x), xi1: f(&xi1), xi2: f(&xi2), lhs, rhs }),
            });
        }
    }
    Ok(SubadditivityReport { samples: sample_count, verdict: Verdict::Holds, counterexample: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct HermitianReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub verdict: Verdict,
}

/// Samples `|p(x, −ξ) − conj p(x, ξ)|` at random pairs.
pub fn check_hermitian<T: Scalar>(model: &SymbolModel<T>, sample_count: usize, rng_seed: u64) -> Result<HermitianReport> {
    let d = model.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut max_deviation = 0.0f64;
    let mut ok = true;
    for _ in 0..sample_count {
        let x: Vec<T> = (0..d).map(|_| T::lit(rng.random_range(-5.0..5.0))).collect();
        let r = rng.random_range((1e-2f64).ln()..(1e2f64).ln()).exp();
        let xi: Vec<T> = (0..d).map(|_| T::lit(r * rng.random_range(-1.0..1.0))).collect();
        let neg: Vec<T> = xi.iter().map(|&c| -c).collect();
        let p = model.eval(&x, &xi)?;
        let q = model.eval(&x, &neg)?;
        let dev = (q - p.conj()).norm();
        ok &= dev <= model.tolerance(p.norm());
        max_deviation = max_deviation.max(dev.to_f64_lossy());
    }
    let verdict = if ok { Verdict::Holds } else { Verdict::Fails };
    Ok(HermitianReport { samples: sample_count, max_deviation, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::grid::{lin_space, log_space};
    use crate::symbol::{StableLikeSpec, StateFn};

    fn expr_model(re: &str, im: Option<&str>) -> SymbolModel<f64> {
        SymbolModel::expression("e", 1, Expr::parse(re).unwrap(), im.map(|s| Expr::parse(s).unwrap()), true).unwrap()
    }

    fn xs() -> Vec<Vec<f64>> {
        lin_space(-std::f64::consts::PI, std::f64::consts::PI, 65).into_iter().map(|v| vec![v]).collect()
    }

    fn xis(r_max: f64) -> Vec<Vec<f64>> {
        log_space(1e-2, r_max, 60).into_iter().flat_map(|r| [vec![r], vec![-r]]).collect()
    }

    #[test]
    fn bounded_coefficient_examples() {
        let r = check_bounded_coefficients(&SymbolModel::alpha_stable(1, 1.5, 1.0), &xs(), &xis(1e3)).unwrap();
        assert!(r.c_est <= 1.0 && r.verdict == Verdict::Holds, "{r:?}");

        let r = check_bounded_coefficients(&expr_model("xi^2*(2 + sin(x))", None), &xs(), &xis(1e3)).unwrap();
        assert!((r.c_est - 3.0).abs() < 1e-4, "{r:?}");
        assert_eq!(r.verdict, Verdict::Holds);

        let r = check_bounded_coefficients(&expr_model("xi^4", None), &xs(), &xis(1e3)).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let t = &r.growth_trace;
        assert!(t.windows(2).all(|w| w[1].1 >= 2.0 * w[0].1), "{t:?}");
    }

    #[test]
    fn sector_examples() {
        let r = check_sector_condition(&SymbolModel::brownian(1, 1.0), &xs(), &xis(10.0)).unwrap();
        assert_eq!((r.c, r.verdict), (0.0, Verdict::Holds));
        let r = check_sector_condition(&expr_model("abs(xi)", Some("0.5*xi")), &xs(), &xis(10.0)).unwrap();
        assert!((r.c - 0.5).abs() < 1e-12 && r.verdict == Verdict::Holds);
        let r = check_sector_condition(&expr_model("abs(xi)", Some("2*xi")), &xs(), &xis(10.0)).unwrap();
        assert!((r.c - 2.0).abs() < 1e-12 && r.verdict == Verdict::Fails);
        let r = check_sector_condition(&expr_model("abs(xi)*abs(sin(x))", Some("xi")), &xs(), &xis(10.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.witness.is_some());
    }

    #[test]
    fn feller_decay_examples() {
        let radii = [1.0, 10.0, 100.0, 1e3, 1e4];
        let alpha = StateFn::from_expr(Expr::parse("1.5 + 0.3*sin(x)").unwrap());
        let m = SymbolModel::stable_like("s", StableLikeSpec::new(1, alpha, 1.2, 1.8, true).unwrap());
        let r = check_feller_decay(&m, &radii, 1e-3, 201).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        for &(rk, sk) in &r.trace {
            assert!(sk <= rk.powf(-1.2) * (1.0 + 1e-12));
        }

        let m = expr_model("(1 + x^2)*xi^2", None);
        let r = check_feller_decay(&m, &radii, 1e-3, 201).unwrap();
        assert_eq!(r.verdict, Verdict::Fails, "{r:?}");
        for &(rk, sk) in &r.trace {
            assert!((sk - (1.0 + rk * rk) / (rk * rk)).abs() < 1e-12);
        }

        let r = check_feller_decay(&SymbolModel::zero(1), &radii, 1e-3, 11).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.trace.iter().all(|t| t.1 == 0.0));
    }

    #[test]
    fn subadditivity_examples() {
        for &a in &[0.3, 1.0, 1.7, 2.0] {
            let r = check_sqrt_subadditivity(&SymbolModel::alpha_stable(1, a, 1.0), 10_000, 7).unwrap();
            assert_eq!(r.verdict, Verdict::Holds, "α={a}");
        }
        let r = check_sqrt_subadditivity(&expr_model("xi^4", None), 1000, 7).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let c = r.counterexample.unwrap();
        assert!(c.lhs > c.rhs);
    }

    #[test]
    fn hermitian_checks() {
        let r = check_hermitian(&expr_model("abs(xi)", Some("0.5*xi")), 1000, 3).unwrap();
        assert_eq!((r.verdict, r.max_deviation), (Verdict::Holds, 0.0));
        let r = check_hermitian(&expr_model("abs(xi)", Some("abs(xi)")), 100, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
    }
}
