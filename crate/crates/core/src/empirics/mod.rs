//! Estimators over path ensembles and their comparison with the bounds.

mod occupation;
mod output;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criteria::{char_fn_bound, Envelope};
use crate::error::{FellerError, Result};
use crate::scalar::{dot, pairwise_sum};
use crate::simulate::{PathEnsemble, SymmetrizedEnsemble};
use crate::symbol::SymbolModel;

pub use occupation::{
    estimate_local_time, exit_frequency, local_time_refinement, occupation_fourier_check, transience_diagnostic,
    ExitEstimate, OccupationEstimate, OccupationFourierReport, OccupationFourierRow, RefinementCheck, TransienceAssessment,
    TransienceDiagnostic, TransienceRow,
};
pub use output::{write_margins_csv, MarginRow};

/// Width of the noise envelope, in standard errors, used by every comparison.
pub const SIGMA_MULTIPLE: f64 = 3.0;

/// Mean and standard error of the mean.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Empirical `λ̂_t(x₀, ξ) = mean_p e^{i⟨X_t − x₀, ξ⟩}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharFnEstimate {
    pub xi: Vec<f64>,
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub n_paths: usize,
}

impl CharFnEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// `√(σ_re² + σ_im²)`, the standard error used for `|λ̂|`.
    pub fn std_error(&self) -> f64 {
        self.std_error_re.hypot(self.std_error_im)
    }

    /// Unbiased estimate of `|λ_t|²` from the same sample.
    pub fn squared_modulus_unbiased(&self) -> f64 {
        let n = self.n_paths as f64;
        if self.n_paths < 2 {
            return self.value().norm_sqr();
        }
        (n * self.value().norm_sqr() - 1.0) / (n - 1.0)
    }
}

pub fn empirical_char_fn(ensemble: &PathEnsemble, t: f64, xi: &[f64]) -> Result<CharFnEstimate> {
    if xi.len() != ensemble.dimension {
        return Err(FellerError::domain(format!(
            "frequency has dimension {}, ensemble has {}",
            xi.len(),
            ensemble.dimension
        )));
    }
    let k = ensemble.require_time_index(t)?;
    let mut cos = Vec::with_capacity(ensemble.n_paths);
    let mut sin = Vec::with_capacity(ensemble.n_paths);
    let mut shift = vec![0.0; ensemble.dimension];
    for p in 0..ensemble.n_paths {
        for ((s, x), x0) in shift.iter_mut().zip(ensemble.position(p, k)).zip(&ensemble.start) {
            *s = x - x0;
        }
        let (s, c) = dot(&shift, xi).sin_cos();
        cos.push(c);
        sin.push(s);
    }
    let (re, std_error_re) = mean_and_se(&cos);
    let (im, std_error_im) = mean_and_se(&sin);
    Ok(CharFnEstimate {
        xi: xi.to_vec(),
        t: ensemble.time_grid[k],
        re,
        im,
        std_error_re,
        std_error_im,
        n_paths: ensemble.n_paths,
    })
}

/// Comparison of `|λ̂|` with `char_fn_bound` over a `(t, ξ)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharBoundReport {
    pub rows: Vec<MarginRow>,
    /// Points with `margin < −3σ`.
    pub violations: usize,
    /// Fraction of points with `margin ≥ −3σ`.
    pub fraction_within: f64,
}

impl CharBoundReport {
    /// At least `min_fraction` of the points lie within the noise envelope.
    pub fn passes(&self, min_fraction: f64) -> bool {
        self.fraction_within >= min_fraction
    }
}

pub fn validate_char_bound(
    ensemble: &PathEnsemble,
    env: &Envelope<f64>,
    t_set: &[f64],
    xi_set: &[Vec<f64>],
) -> Result<CharBoundReport> {
    let mut rows = Vec::with_capacity(t_set.len() * xi_set.len());
    for &t in t_set {
        for xi in xi_set {
            let est = empirical_char_fn(ensemble, t, xi)?;
            let bound = char_fn_bound(env, t, xi)?;
            let estimate = est.value().norm();
            let std_error = est.std_error();
            let margin = bound - estimate;
            rows.push(MarginRow {
                check: "char_bound".into(),
                t,
                xi: xi.clone(),
                estimate,
                std_error,
                bound,
                margin,
                within: margin >= -SIGMA_MULTIPLE * std_error,
            });
        }
    }
    let violations = rows.iter().filter(|r| !r.within).count();
    let fraction_within = if rows.is_empty() { 1.0 } else { 1.0 - violations as f64 / rows.len() as f64 };
    Ok(CharBoundReport { rows, violations, fraction_within })
}

/// One point of the symmetrization law check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationRow {
    pub t: f64,
    pub xi: Vec<f64>,
    /// `λ̂^S_t(ξ)` of the symmetrized paths.
    pub symmetrized_re: f64,
    pub symmetrized_im: f64,
    /// Unbiased `|λ̂_t(ξ/2)|²` of the base paths.
    pub base_squared: f64,
    pub combined_std_error: f64,
    pub deviation: f64,
    /// `|deviation| ≤ 3σ` and `|Im λ̂^S| ≤ 3σ_im`.
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationReport {
    pub rows: Vec<SymmetrizationRow>,
    pub n_within: usize,
    /// Base and mirror came from disjoint streams.
    pub independent: bool,
}

/// Checks that `λ^S_t(ξ)` is real and equals `|λ_t(ξ/2)|²`.
pub fn symmetrization_law_check(
    sym: &SymmetrizedEnsemble,
    t_set: &[f64],
    xi_set: &[Vec<f64>],
) -> Result<SymmetrizationReport> {
    let mut rows = Vec::new();
    for &t in t_set {
        for xi in xi_set {
            let s = empirical_char_fn(&sym.symmetrized, t, xi)?;
            let half: Vec<f64> = xi.iter().map(|c| 0.5 * c).collect();
            let b = empirical_char_fn(&sym.base, t, &half)?;
            let base_squared = b.squared_modulus_unbiased();
            let combined_std_error = s.std_error_re.hypot(2.0 * b.value().norm() * b.std_error());
            let deviation = s.re - base_squared;
            let within = deviation.abs() <= SIGMA_MULTIPLE * combined_std_error
                && s.im.abs() <= SIGMA_MULTIPLE * s.std_error_im.max(f64::MIN_POSITIVE);
            rows.push(SymmetrizationRow {
                t,
                xi: xi.clone(),
                symmetrized_re: s.re,
                symmetrized_im: s.im,
                base_squared,
                combined_std_error,
                deviation,
                within,
            });
        }
    }
    let n_within = rows.iter().filter(|r| r.within).count();
    Ok(SymmetrizationReport { rows, n_within, independent: sym.independent })
}

/// Extrapolation of `(1 − λ̂_h)/h` to `h = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFit {
    pub x0: Vec<f64>,
    pub xi: Vec<f64>,
    pub intercept_re: f64,
    pub intercept_im: f64,
    /// Batch-means standard error of the real intercept.
    pub intercept_std_error: f64,
    /// `(h, Re (1 − λ̂_h)/h, standard error)`.
    pub points: Vec<(f64, f64, f64)>,
    pub degree: usize,
    /// Noise exceeds the signal.
    pub inconclusive: bool,
}

impl GeneratorFit {
    pub fn intercept(&self) -> Complex64 {
        Complex64::new(self.intercept_re, self.intercept_im)
    }
}

const GENERATOR_BATCHES: usize = 20;

/// Weighted least-squares fit of `(1 − λ̂_h)/h` by a polynomial of degree ≤ 2 in `h`.
pub fn generator_finite_difference(
    ensemble: &PathEnsemble,
    x0: &[f64],
    xi: &[f64],
    h_set: &[f64],
) -> Result<GeneratorFit> {
    if x0 != ensemble.start.as_slice() {
        return Err(FellerError::precondition("ensemble must start at x0"));
    }
    let (lo, hi) = h_set.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
    if h_set.len() < 2 || !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(FellerError::precondition("h values must be positive and span a decade"));
    }
    let idx: Vec<usize> = h_set.iter().map(|&h| ensemble.require_time_index(h)).collect::<Result<_>>()?;
    let degree = if h_set.len() >= 5 { 2 } else { 1 };

    // Per-path summands cos⟨X_h − x₀, ξ⟩ and sin⟨…⟩ at each h.
    let n = ensemble.n_paths;
    let mut cos = vec![vec![0.0; n]; h_set.len()];
    let mut sin = vec![vec![0.0; n]; h_set.len()];
    let mut shift = vec![0.0; ensemble.dimension];
    for p in 0..n {
        for (j, &k) in idx.iter().enumerate() {
            for ((s, x), c) in shift.iter_mut().zip(ensemble.position(p, k)).zip(x0) {
                *s = x - c;
            }
            let (s, c) = dot(&shift, xi).sin_cos();
            cos[j][p] = c;
            sin[j][p] = s;
        }
    }
    let mut points = Vec::with_capacity(h_set.len());
    let mut y_im = Vec::with_capacity(h_set.len());
    for (j, &h) in h_set.iter().enumerate() {
        let (re, se) = mean_and_se(&cos[j]);
        let (im, _) = mean_and_se(&sin[j]);
        points.push((h, (1.0 - re) / h, se / h));
        y_im.push(-im / h);
    }
    let weights = fit_weights(&points);
    let hs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let intercept_re = weighted_polyfit(&hs, &ys, &weights, degree)?[0];
    let intercept_im = weighted_polyfit(&hs, &y_im, &weights, degree)?[0];

    let batches = GENERATOR_BATCHES.min(n / 10).max(2).min(n);
    let mut batch_intercepts = Vec::with_capacity(batches);
    for b in 0..batches {
        let range = b * n / batches..(b + 1) * n / batches;
        if range.is_empty() {
            continue;
        }
        let yb: Vec<f64> = h_set
            .iter()
            .enumerate()
            .map(|(j, &h)| (1.0 - pairwise_sum(&cos[j][range.clone()]) / range.len() as f64) / h)
            .collect();
        batch_intercepts.push(weighted_polyfit(&hs, &yb, &weights, degree)?[0]);
    }
    let (_, intercept_std_error) = mean_and_se(&batch_intercepts);
    let inconclusive = intercept_std_error > intercept_re.abs() && intercept_std_error > 0.0;
    Ok(GeneratorFit {
        x0: x0.to_vec(),
        xi: xi.to_vec(),
        intercept_re,
        intercept_im,
        intercept_std_error,
        points,
        degree,
        inconclusive,
    })
}

fn fit_weights(points: &[(f64, f64, f64)]) -> Vec<f64> {
    let floor = points.iter().map(|p| p.2).filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return vec![1.0; points.len()];
    }
    points.iter().map(|p| 1.0 / p.2.max(floor).powi(2)).collect()
}

/// Coefficients `c_0, …, c_degree` of the weighted least-squares polynomial.
pub(crate) fn weighted_polyfit(x: &[f64], y: &[f64], w: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = degree + 1;
    if x.len() < m {
        return Err(FellerError::precondition("too few points for the polynomial fit"));
    }
    // Scale x to [0, 1] for conditioning.
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut a = vec![vec![0.0; m + 1]; m];
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let u = xi / scale;
        let powers: Vec<f64> = (0..m).map(|k| u.powi(k as i32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += wi * powers[r] * powers[c];
            }
            a[r][m] += wi * powers[r] * yi;
        }
    }
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        if a[col][col].abs() < 1e-300 {
            return Err(FellerError::Numerical { message: "singular polynomial fit".into(), error_estimate: f64::NAN });
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Ok((0..m).map(|k| a[k][m] / a[k][k] / scale.powi(k as i32)).collect())
}

/// `|λ̂_h − e^{−h·p(x₀,ξ)}|` over `h` and its log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallTimeReport {
    /// `(h, difference, standard error)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Log-log slope over the points above the noise floor; `None` when fewer than two.
    pub slope: Option<f64>,
    /// Every difference is within 3σ of zero.
    pub at_noise_floor: bool,
    pub tolerance: f64,
    /// `slope ≥ 1 − tolerance`, or all differences at the noise floor.
    pub consistent: bool,
}

pub fn validate_small_t_approx(
    ensemble: &PathEnsemble,
    model: &SymbolModel<f64>,
    x0: &[f64],
    xi: &[f64],
    h_set: &[f64],
    tolerance: f64,
) -> Result<SmallTimeReport> {
    if x0 != ensemble.start.as_slice() {
        return Err(FellerError::precondition("ensemble must start at x0"));
    }
    let p = model.eval(x0, xi)?;
    let mut rows = Vec::with_capacity(h_set.len());
    for &h in h_set {
        let est = empirical_char_fn(ensemble, h, xi)?;
        let diff = (est.value() - (-h * p).exp()).norm();
        rows.push((h, diff, est.std_error()));
    }
    let above: Vec<&(f64, f64, f64)> = rows.iter().filter(|r| r.1 > SIGMA_MULTIPLE * r.2).collect();
    let at_noise_floor = above.is_empty();
    let slope = if above.len() >= 2 {
        let x: Vec<f64> = above.iter().map(|r| r.0.ln()).collect();
        let y: Vec<f64> = above.iter().map(|r| r.1.ln()).collect();
        crate::scalar::linear_fit(&x, &y).map(|(s, _)| s)
    } else {
        None
    };
    let consistent = at_noise_floor || slope.is_some_and(|s| s >= 1.0 - tolerance);
    Ok(SmallTimeReport { rows, slope, at_noise_floor, tolerance, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{build_envelope, StateDomain};
    use crate::simulate::{simulate_levy, symmetrize_paths, uniform_grid, SimulationOptions};

    #[test]
    fn char_fn_examples() {
        let e = simulate_levy(&SymbolModel::brownian(1, 1.0), &[0.3], &uniform_grid(0.5, 2), &SimulationOptions::new(20_000, 1))
            .unwrap();
        let est = empirical_char_fn(&e, 1.0, &[1.0]).unwrap();
        assert!((est.re - (-1.0f64).exp()).abs() < 3.0 * est.std_error_re);
        let zero = empirical_char_fn(&e, 1.0, &[0.0]).unwrap();
        assert_eq!((zero.re, zero.im, zero.std_error()), (1.0, 0.0, 0.0));
        let minus = empirical_char_fn(&e, 1.0, &[-1.0]).unwrap();
        assert_eq!((minus.re, minus.im), (est.re, -est.im));
        assert!(empirical_char_fn(&e, 0.7, &[1.0]).is_err());

        let c = simulate_levy(&SymbolModel::alpha_stable(1, 1.0, 1.0), &[0.0], &uniform_grid(1.0, 2), &SimulationOptions::new(20_000, 2))
            .unwrap();
        let est = empirical_char_fn(&c, 2.0, &[1.5]).unwrap();
        assert!((est.re - (-3.0f64).exp()).abs() < 3.0 * est.std_error_re);
    }

    #[test]
    fn stable_bound_has_no_violations() {
        let m = SymbolModel::alpha_stable(1, 1.5, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.25, 8), &SimulationOptions::new(5_000, 3)).unwrap();
        let env = build_envelope(&m, &StateDomain::new(vec![], vec![], None), 3).unwrap();
        let xi: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0].iter().map(|&x| vec![x]).collect();
        let r = validate_char_bound(&e, &env, &[0.0, 0.5, 1.0, 2.0], &xi).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.rows.iter().filter(|row| row.t == 0.0).all(|row| row.margin == 0.0));
    }

    #[test]
    fn generator_for_brownian() {
        let m = SymbolModel::brownian(1, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.01, 10), &SimulationOptions::new(100_000, 4)).unwrap();
        let h = [0.01, 0.02, 0.05, 0.1];
        let fit = generator_finite_difference(&e, &[0.0], &[2.0], &h).unwrap();
        assert!((fit.intercept_re - 4.0).abs() < 3.0 * fit.intercept_std_error + 0.05, "{fit:?}");
        let zero = generator_finite_difference(&e, &[0.0], &[0.0], &h).unwrap();
        assert_eq!(zero.intercept_re, 0.0);
        assert!(generator_finite_difference(&e, &[0.0], &[1.0], &[0.02, 0.05]).is_err());
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let x = [0.1, 0.2, 0.5, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 2.0 * v + 0.5 * v * v).collect();
        let c = weighted_polyfit(&x, &y, &[1.0; 5], 2).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetrization_law_for_cauchy() {
        let m = SymbolModel::alpha_stable(1, 1.0, 1.0);
        let grid = uniform_grid(0.5, 4);
        let opts = SimulationOptions::new(20_000, 6);
        let base = simulate_levy(&m, &[0.0], &grid, &opts).unwrap();
        let mirror = simulate_levy(&m, &[0.0], &grid, &opts.mirror()).unwrap();
        let sym = symmetrize_paths(base, mirror).unwrap();
        let xi: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|&x| vec![x]).collect();
        let r = symmetrization_law_check(&sym, &[0.5, 1.0, 1.5, 2.0], &xi).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert!(r.n_within >= 11, "{r:?}");
    }

    #[test]
    fn small_time_for_levy_is_at_noise_floor() {
        let m = SymbolModel::alpha_stable(1, 1.5, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.01, 10), &SimulationOptions::new(20_000, 8)).unwrap();
        let r = validate_small_t_approx(&e, &m, &[0.0], &[1.0], &[0.01, 0.02, 0.05, 0.1], 0.1).unwrap();
        assert!(r.consistent);
    }
}
