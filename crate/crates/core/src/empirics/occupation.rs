//! Occupation times, local times, exit frequencies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criteria::{local_time_fourier_bound, Envelope};
use crate::error::{FellerError, Result};
use crate::scalar::{dot, linear_fit, norm, pairwise_sum};
use crate::simulate::PathEnsemble;

use super::{mean_and_se, MarginRow, SIGMA_MULTIPLE};

/// Binned occupation density of a one-dimensional ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationEstimate {
    pub edges: Vec<f64>,
    pub t_horizon: f64,
    /// `L̂(x, t)` per bin: time in bin over bin width, averaged over paths.
    pub density: Vec<f64>,
    /// `Σ L̂·width`
    pub total_mass: f64,
    /// Mean time spent outside the window.
    pub outside_mass: f64,
    /// More than 5% of the time falls outside the window.
    pub window_warning: bool,
}

impl OccupationEstimate {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn sup(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }
}

/// Time of each step is attributed to the bin of its left endpoint, over the
/// window `x₀ ± half_width`.
pub fn estimate_local_time(
    ensemble: &PathEnsemble,
    t_horizon: f64,
    bin_width: f64,
    half_width: f64,
) -> Result<OccupationEstimate> {
    if ensemble.dimension != 1 {
        return Err(FellerError::precondition("local times are estimated in d = 1 only"));
    }
    if !(bin_width > 0.0 && half_width >= bin_width) {
        return Err(FellerError::domain("need 0 < bin_width ≤ half_width"));
    }
    let end = ensemble.require_time_index(t_horizon)?;
    let n_bins = (2.0 * half_width / bin_width).round() as usize;
    let lower = ensemble.start[0] - 0.5 * n_bins as f64 * bin_width;
    let edges: Vec<f64> = (0..=n_bins).map(|k| lower + k as f64 * bin_width).collect();
    let mut time = vec![0.0; n_bins];
    let mut outside = 0.0;
    let grid = &ensemble.time_grid;
    for p in 0..ensemble.n_paths {
        for k in 0..end {
            let dt = grid[k + 1] - grid[k];
            let b = ((ensemble.position(p, k)[0] - lower) / bin_width).floor();
            if b >= 0.0 && (b as usize) < n_bins {
                time[b as usize] += dt;
            } else {
                outside += dt;
            }
        }
    }
    let n = ensemble.n_paths as f64;
    let density: Vec<f64> = time.iter().map(|s| s / n / bin_width).collect();
    let inside: Vec<f64> = density.iter().map(|l| l * bin_width).collect();
    let total_mass = pairwise_sum(&inside);
    let outside_mass = outside / n;
    Ok(OccupationEstimate {
        edges,
        t_horizon,
        density,
        total_mass,
        outside_mass,
        window_warning: outside_mass > 0.05 * t_horizon,
    })
}

/// Change of `sup L̂` when the bins are halved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub sup_coarse: f64,
    pub sup_fine: f64,
    pub relative_change: f64,
    pub note: String,
}

pub fn local_time_refinement(
    ensemble: &PathEnsemble,
    t_horizon: f64,
    bin_width: f64,
    half_width: f64,
) -> Result<RefinementCheck> {
    let coarse = estimate_local_time(ensemble, t_horizon, bin_width, half_width)?;
    let fine = estimate_local_time(ensemble, t_horizon, 0.5 * bin_width, half_width)?;
    let (a, b) = (coarse.sup(), fine.sup());
    Ok(RefinementCheck {
        sup_coarse: a,
        sup_fine: b,
        relative_change: (b - a).abs() / a.max(f64::MIN_POSITIVE),
        note: "bin-refinement stability is a pragmatic stand-in; convergence of the binned estimator to the \
               L²(dx⊗dP) local time is not quantified"
            .into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationFourierRow {
    pub xi: Vec<f64>,
    /// Mean of `|μ̂(ξ)|²` over paths.
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationFourierReport {
    pub horizon: f64,
    pub rows: Vec<OccupationFourierRow>,
}

impl OccupationFourierReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.passes)
    }

    pub fn margin_rows(&self) -> Vec<MarginRow> {
        self.rows
            .iter()
            .map(|r| MarginRow {
                check: "occupation_fourier".into(),
                t: self.horizon,
                xi: r.xi.clone(),
                estimate: r.estimate,
                std_error: r.std_error,
                bound: r.bound,
                margin: r.bound - r.estimate,
                within: r.passes,
            })
            .collect()
    }
}

/// Largest admissible `e^{−T}`.
const HORIZON_TOLERANCE: f64 = 1e-6;

/// `E|μ̂(ξ)|²` with `μ̂(ξ) = ∫_0^T e^{−t}e^{i⟨X_t,ξ⟩}dt` against `16/(16 + q_inf(ξ))`.
///
/// The integrand is interpolated linearly between grid times and integrated
/// against `e^{−t}` exactly.
pub fn occupation_fourier_check(
    ensemble: &PathEnsemble,
    env: &Envelope<f64>,
    xi_set: &[Vec<f64>],
) -> Result<OccupationFourierReport> {
    let grid = &ensemble.time_grid;
    let horizon = *grid.last().unwrap();
    if (-horizon).exp() > HORIZON_TOLERANCE {
        return Err(FellerError::precondition(format!(
            "horizon {horizon} too short: e^(-T) exceeds {HORIZON_TOLERANCE}"
        )));
    }
    // Weights for g(t_k): contributions from the intervals on both sides.
    let mut weights = vec![0.0; grid.len()];
    for k in 0..grid.len() - 1 {
        let (a, delta) = (grid[k], grid[k + 1] - grid[k]);
        let e = (-a).exp();
        let tail = (-delta).exp_m1();
        weights[k] += e * (delta + tail) / delta;
        weights[k + 1] += e * (-tail - delta * (-delta).exp()) / delta;
    }
    let mut rows = Vec::with_capacity(xi_set.len());
    for xi in xi_set {
        if xi.len() != ensemble.dimension {
            return Err(FellerError::domain("frequency dimension does not match the ensemble"));
        }
        let mut values = Vec::with_capacity(ensemble.n_paths);
        let mut terms = vec![Complex64::new(0.0, 0.0); grid.len()];
        for p in 0..ensemble.n_paths {
            for (k, term) in terms.iter_mut().enumerate() {
                let (s, c) = dot(ensemble.position(p, k), xi).sin_cos();
                *term = Complex64::new(c, s) * weights[k];
            }
            let re: Vec<f64> = terms.iter().map(|z| z.re).collect();
            let im: Vec<f64> = terms.iter().map(|z| z.im).collect();
            values.push(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)).norm_sqr());
        }
        let (estimate, std_error) = mean_and_se(&values);
        let bound = local_time_fourier_bound(env, xi)?;
        rows.push(OccupationFourierRow {
            xi: xi.clone(),
            estimate,
            std_error,
            bound,
            passes: estimate <= bound + SIGMA_MULTIPLE * std_error,
        });
    }
    Ok(OccupationFourierReport { horizon, rows })
}

/// Fraction of paths whose grid supremum of `|X_s − x₀|` up to `t` reaches `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEstimate {
    pub r: f64,
    pub t: f64,
    pub probability: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

pub fn exit_frequency(ensemble: &PathEnsemble, x0: &[f64], r: f64, t: f64) -> Result<ExitEstimate> {
    if x0.len() != ensemble.dimension {
        return Err(FellerError::domain("state dimension does not match the ensemble"));
    }
    let end = ensemble.require_time_index(t)?;
    let mut shift = vec![0.0; ensemble.dimension];
    let exits = (0..ensemble.n_paths)
        .filter(|&p| {
            (0..=end).any(|k| {
                for ((s, x), c) in shift.iter_mut().zip(ensemble.position(p, k)).zip(x0) {
                    *s = x - c;
                }
                norm(&shift) >= r
            })
        })
        .count();
    let n = ensemble.n_paths as f64;
    let probability = exits as f64 / n;
    Ok(ExitEstimate {
        r,
        t,
        probability,
        std_error: (probability * (1.0 - probability) / n).sqrt(),
        n_paths: ensemble.n_paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransienceAssessment {
    /// Occupation time levels off in T.
    Saturating,
    /// Occupation time keeps growing.
    Growing,
    Unclear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransienceRow {
    pub horizon: f64,
    pub mean_occupation: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransienceDiagnostic {
    pub rows: Vec<TransienceRow>,
    /// Log-log slope of the mean occupation over the last half of the horizons.
    pub growth_exponent: f64,
    pub assessment: TransienceAssessment,
    pub note: String,
}

/// Mean time spent in the box `[lower, upper]` up to each horizon.
pub fn transience_diagnostic(
    ensemble: &PathEnsemble,
    lower: &[f64],
    upper: &[f64],
    horizons: &[f64],
) -> Result<TransienceDiagnostic> {
    let d = ensemble.dimension;
    if lower.len() != d || upper.len() != d {
        return Err(FellerError::domain("box dimension does not match the ensemble"));
    }
    if horizons.len() < 3 || horizons.windows(2).any(|w| !(w[0] < w[1])) || !(horizons[0] > 0.0) {
        return Err(FellerError::precondition("need at least three increasing positive horizons"));
    }
    let idx: Vec<usize> = horizons.iter().map(|&t| ensemble.require_time_index(t)).collect::<Result<_>>()?;
    let grid = &ensemble.time_grid;
    let last = *idx.last().unwrap();
    let mut per_path = vec![vec![0.0; idx.len()]; ensemble.n_paths];
    for (p, occ) in per_path.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut j = 0;
        for k in 0..last {
            while j < idx.len() && idx[j] == k {
                occ[j] = acc;
                j += 1;
            }
            let x = ensemble.position(p, k);
            if x.iter().zip(lower).zip(upper).all(|((v, a), b)| v >= a && v <= b) {
                acc += grid[k + 1] - grid[k];
            }
        }
        while j < idx.len() {
            occ[j] = acc;
            j += 1;
        }
    }
    let rows: Vec<TransienceRow> = horizons
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let v: Vec<f64> = per_path.iter().map(|o| o[j]).collect();
            let (mean_occupation, std_error) = mean_and_se(&v);
            TransienceRow { horizon: h, mean_occupation, std_error }
        })
        .collect();
    let tail = &rows[rows.len() / 2..];
    let growth_exponent = if tail.len() >= 2 && tail.iter().all(|r| r.mean_occupation > 0.0) {
        let x: Vec<f64> = tail.iter().map(|r| r.horizon.ln()).collect();
        let y: Vec<f64> = tail.iter().map(|r| r.mean_occupation.ln()).collect();
        linear_fit(&x, &y).map_or(f64::NAN, |(s, _)| s)
    } else {
        f64::NAN
    };
    let assessment = if growth_exponent < 0.2 {
        TransienceAssessment::Saturating
    } else if growth_exponent > 0.35 {
        TransienceAssessment::Growing
    } else {
        TransienceAssessment::Unclear
    };
    Ok(TransienceDiagnostic {
        rows,
        growth_exponent,
        assessment,
        note: "diagnostic only: saturation is consistent with transience, growth with recurrence; no verdict".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{build_envelope, StateDomain};
    use crate::simulate::{simulate_levy, uniform_grid, SimulationOptions};
    use crate::symbol::SymbolModel;

    #[test]
    fn local_time_mass_and_symmetry() {
        let m = SymbolModel::brownian(1, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.01, 100), &SimulationOptions::new(4_000, 1)).unwrap();
        let l = estimate_local_time(&e, 1.0, 0.1, 6.0).unwrap();
        assert!((l.total_mass + l.outside_mass - 1.0).abs() < 1e-9);
        assert!(l.outside_mass < 1e-3 && !l.window_warning);
        let n = l.density.len();
        let left: f64 = l.density[..n / 2].iter().sum::<f64>() * 0.1;
        assert!((left - 0.5).abs() < 0.03, "{left}");
        assert!(estimate_local_time(&e, 1.0, 0.1, 0.5).unwrap().window_warning);
    }

    #[test]
    fn exit_frequency_examples() {
        let m = SymbolModel::brownian(1, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.001, 10), &SimulationOptions::new(2_000, 2)).unwrap();
        assert_eq!(exit_frequency(&e, &[0.0], 1.0, 0.0).unwrap().probability, 0.0);
        assert!(exit_frequency(&e, &[0.0], 1.0, 0.01).unwrap().probability < 0.01);
    }

    #[test]
    fn occupation_fourier_for_brownian() {
        let m = SymbolModel::brownian(1, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.02, 700), &SimulationOptions::new(2_000, 3)).unwrap();
        let env = build_envelope(&m, &StateDomain::new(vec![], vec![], None), 3).unwrap();
        let xi: Vec<Vec<f64>> = [0.0, 1.0, 4.0].iter().map(|&x| vec![x]).collect();
        let r = occupation_fourier_check(&e, &env, &xi).unwrap();
        assert!(r.all_pass());
        assert!((r.rows[0].estimate - 1.0).abs() < 1e-5);
        // E|μ̂(ξ)|² = 1/(1 + ψ(ξ)) for a Lévy process.
        assert!((r.rows[1].estimate - 0.5).abs() < 4.0 * r.rows[1].std_error + 0.02, "{:?}", r.rows[1]);
        let short = simulate_levy(&m, &[0.0], &uniform_grid(0.5, 10), &SimulationOptions::new(10, 3)).unwrap();
        assert!(occupation_fourier_check(&short, &env, &xi).is_err());
    }

    #[test]
    fn transience_diagnostic_saturates_for_stable_half() {
        let m = SymbolModel::alpha_stable(1, 0.5, 1.0);
        let e = simulate_levy(&m, &[0.0], &uniform_grid(0.1, 2000), &SimulationOptions::new(500, 4).with_decimation(1))
            .unwrap();
        let r = transience_diagnostic(&e, &[-1.0], &[1.0], &[10.0, 25.0, 50.0, 100.0, 200.0]).unwrap();
        assert_eq!(r.assessment, TransienceAssessment::Saturating, "{r:?}");
        let b = simulate_levy(&SymbolModel::brownian(1, 1.0), &[0.0], &uniform_grid(0.1, 2000), &SimulationOptions::new(500, 4))
            .unwrap();
        let r = transience_diagnostic(&b, &[-1.0], &[1.0], &[10.0, 25.0, 50.0, 100.0, 200.0]).unwrap();
        assert_eq!(r.assessment, TransienceAssessment::Growing, "{r:?}");
    }
}
